#include "folia/exact.hpp"

#include <climits>
#include <sstream>

namespace folia {

namespace {
BigInt int_gcd(BigInt a, BigInt b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    BigInt r = a % b;
    a = b;
    b = r;
  }
  return a;
}
}  // namespace

Poly::Poly(const BigInt& constant) {
  if (constant != 0) c_.push_back(constant);
}

Poly::Poly(long long constant) : Poly(BigInt(constant)) {}

Poly Poly::monomial(const BigInt& coeff, int degree) {
  Poly p;
  if (coeff != 0) {
    p.c_.assign(degree + 1, BigInt(0));
    p.c_[degree] = coeff;
  }
  return p;
}

void Poly::trim() {
  while (!c_.empty() && c_.back() == 0) c_.pop_back();
}

const BigInt& Poly::coeff(int k) const {
  static const BigInt zero(0);
  if (k < 0 || k >= static_cast<int>(c_.size())) return zero;
  return c_[k];
}

Poly Poly::operator+(const Poly& o) const {
  Poly r;
  r.c_.resize(std::max(c_.size(), o.c_.size()), BigInt(0));
  for (size_t k = 0; k < r.c_.size(); ++k) r.c_[k] = coeff(k) + o.coeff(k);
  r.trim();
  return r;
}

Poly Poly::operator-(const Poly& o) const { return *this + (-o); }

Poly Poly::operator-() const {
  Poly r = *this;
  for (auto& c : r.c_) c = -c;
  return r;
}

Poly Poly::operator*(const Poly& o) const {
  if (is_zero() || o.is_zero()) return Poly();
  Poly r;
  r.c_.assign(c_.size() + o.c_.size() - 1, BigInt(0));
  for (size_t i = 0; i < c_.size(); ++i)
    for (size_t j = 0; j < o.c_.size(); ++j) r.c_[i + j] += c_[i] * o.c_[j];
  r.trim();
  return r;
}

BigInt Poly::content() const {
  BigInt g(0);
  for (const auto& c : c_) g = int_gcd(g, c);
  if (g != 0 && c_.back() < 0) g = -g;
  return g;
}

int Poly::order_at_zero() const {
  if (is_zero()) throw std::domain_error("order_at_zero of zero polynomial");
  for (size_t k = 0; k < c_.size(); ++k)
    if (c_[k] != 0) return static_cast<int>(k);
  return 0;  // unreachable
}

Poly Poly::shifted_down(int k) const {
  if (k == 0) return *this;
  if (is_zero()) return Poly();
  if (order_at_zero() < k)
    throw std::domain_error("shifted_down: t^k does not divide polynomial");
  Poly r;
  r.c_.assign(c_.begin() + k, c_.end());
  return r;
}

Rational Poly::eval(const Rational& t) const {
  Rational acc(0);
  for (size_t k = c_.size(); k-- > 0;) acc = acc * t + Rational(c_[k]);
  return acc;
}

std::string Poly::str() const {
  if (is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (size_t k = c_.size(); k-- > 0;) {
    const BigInt& c = c_[k];
    if (c == 0) continue;
    BigInt a = c < 0 ? BigInt(-c) : c;
    if (first) {
      if (c < 0) os << "-";
      first = false;
    } else {
      os << (c < 0 ? "-" : "+");
    }
    if (a != 1 || k == 0) os << a.str();
    if (k > 0) {
      if (a != 1) os << "*";
      os << "t";
      if (k > 1) os << "^" << k;
    }
  }
  return os.str();
}

Poly Poly::div_exact(const Poly& a, const Poly& b) {
  if (b.is_zero()) throw std::domain_error("polynomial division by zero");
  if (a.is_zero()) return Poly();
  // exact division over the rationals, verified integral at the end
  std::vector<Rational> rem(a.c_.begin(), a.c_.end());
  int db = b.degree();
  Rational lb(b.c_.back());
  int dq = a.degree() - db;
  if (dq < 0) throw std::domain_error("polynomial division: not divisible");
  std::vector<Rational> q(dq + 1, Rational(0));
  for (int k = dq; k >= 0; --k) {
    Rational f = rem[k + db] / lb;
    q[k] = f;
    for (int j = 0; j <= db; ++j) rem[k + j] -= f * Rational(b.c_[j]);
  }
  for (const auto& r : rem)
    if (r != 0) throw std::domain_error("polynomial division: not divisible");
  Poly out;
  out.c_.resize(dq + 1);
  for (int k = 0; k <= dq; ++k) {
    if (boost::multiprecision::denominator(q[k]) != 1)
      throw std::domain_error("polynomial division: non-integer quotient");
    out.c_[k] = boost::multiprecision::numerator(q[k]);
  }
  out.trim();
  return out;
}

Poly Poly::gcd(Poly a, Poly b) {
  auto primitive = [](Poly p) {
    if (p.is_zero()) return p;
    BigInt c = p.content();
    for (auto& x : p.c_) x /= c;
    return p;
  };
  a = primitive(a);
  b = primitive(b);
  while (!b.is_zero()) {
    // pseudo-remainder of a by b
    int da = a.degree(), db = b.degree();
    if (da < db) {
      std::swap(a, b);
      continue;
    }
    BigInt lb = b.c_.back();
    Poly r = a;
    for (int k = da - db; k >= 0; --k) {
      // scale so the leading term cancels without fractions
      if (r.degree() == db + k) {
        BigInt lr = r.c_.back();
        for (auto& x : r.c_) x *= lb;
        Poly sub = Poly::monomial(lr, k) * b;
        r = r - sub;
      }
      if (r.is_zero()) break;
    }
    a = b;
    b = primitive(r);
  }
  a = primitive(a);
  if (!a.is_zero() && a.c_.back() < 0)
    for (auto& x : a.c_) x = -x;
  return a;
}

ExactScalar::ExactScalar(const Rational& value)
    : num_(Poly(BigInt(boost::multiprecision::numerator(value)))),
      den_(Poly(BigInt(boost::multiprecision::denominator(value)))) {}

ExactScalar::ExactScalar(const Poly& num, const Poly& den) : num_(num), den_(den) {
  if (den_.is_zero()) throw std::domain_error("ExactScalar: zero denominator");
  reduce();
}

ExactScalar ExactScalar::t() { return ExactScalar(Poly::monomial(BigInt(1), 1), Poly(1LL)); }

ExactScalar ExactScalar::eps() { return ExactScalar(Poly::monomial(BigInt(1), 2), Poly(1LL)); }

void ExactScalar::reduce() {
  if (num_.is_zero()) {
    den_ = Poly(1LL);
    return;
  }
  Poly g = Poly::gcd(num_, den_);
  if (g.degree() > 0 || g.coeff(0) != 1) {
    num_ = Poly::div_exact(num_, g);
    den_ = Poly::div_exact(den_, g);
  }
  BigInt cn = num_.content(), cd = den_.content();
  BigInt c = int_gcd(cn, cd);
  if (cd < 0) c = -c;  // keep the denominator's leading coefficient positive
  if (c != 1) {
    num_ = Poly::div_exact(num_, Poly(c));
    den_ = Poly::div_exact(den_, Poly(c));
  }
}

ExactScalar ExactScalar::operator+(const ExactScalar& o) const {
  return ExactScalar(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
}

ExactScalar ExactScalar::operator-(const ExactScalar& o) const {
  return ExactScalar(num_ * o.den_ - o.num_ * den_, den_ * o.den_);
}

ExactScalar ExactScalar::operator*(const ExactScalar& o) const {
  return ExactScalar(num_ * o.num_, den_ * o.den_);
}

ExactScalar ExactScalar::operator/(const ExactScalar& o) const {
  if (o.num_.is_zero()) throw std::domain_error("ExactScalar: division by zero");
  return ExactScalar(num_ * o.den_, den_ * o.num_);
}

ExactScalar ExactScalar::operator-() const {
  ExactScalar r = *this;
  r.num_ = -r.num_;
  return r;
}

bool ExactScalar::operator==(const ExactScalar& o) const {
  // representations are canonical
  return num_ == o.num_ && den_ == o.den_;
}

Rational ExactScalar::eval(const Rational& t0) const {
  Rational d = den_.eval(t0);
  if (d == 0) throw std::domain_error("ExactScalar: evaluation at a pole");
  return num_.eval(t0) / d;
}

ExactScalar::Limit ExactScalar::limit_at_zero() const {
  Limit lim;
  Rational d = den_.eval(Rational(0));
  if (d != 0) {
    lim.finite = true;
    lim.value = num_.eval(Rational(0)) / d;
    return lim;
  }
  // reduced form: t divides the denominator, so it cannot divide the numerator
  lim.finite = false;
  lim.pole_order = den_.order_at_zero();
  return lim;
}

int ExactScalar::t_order() const {
  if (num_.is_zero()) return INT_MAX;
  int od = den_.eval(Rational(0)) == 0 ? den_.order_at_zero() : 0;
  return num_.order_at_zero() - od;
}

std::string ExactScalar::str() const {
  if (den_.degree() == 0 && den_.coeff(0) == 1) return num_.str();
  return "(" + num_.str() + ")/(" + den_.str() + ")";
}

double to_double(const Rational& r) {
  return boost::multiprecision::numerator(r).convert_to<double>() /
         boost::multiprecision::denominator(r).convert_to<double>();
}

}  // namespace folia
