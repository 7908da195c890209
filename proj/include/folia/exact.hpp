#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>
#include <string>
#include <vector>

// Exact scalar arithmetic for the adiabatic scale parameter.  All metric
// rescalings are polynomial in t (with eps = t^2), and Koszul combinations of
// rescaled structure constants are ratios of integer-coefficient polynomials
// in t.  Working over arbitrary-precision integers keeps every identity check
// exact; nothing in this layer ever rounds.

namespace folia {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Dense univariate polynomial over BigInt in the variable t.
class Poly {
public:
  Poly() = default;  // zero polynomial
  explicit Poly(const BigInt& constant);
  explicit Poly(long long constant);
  static Poly monomial(const BigInt& coeff, int degree);

  // degree of the zero polynomial is -1
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }
  const BigInt& coeff(int k) const;  // 0 outside the stored range

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly operator-() const;
  bool operator==(const Poly& o) const { return c_ == o.c_; }

  // gcd of coefficients, carrying the sign of the leading coefficient
  BigInt content() const;
  // lowest k with nonzero t^k coefficient; requires a nonzero polynomial
  int order_at_zero() const;
  Poly shifted_down(int k) const;  // divide by t^k (must divide exactly)

  Rational eval(const Rational& t) const;
  std::string str() const;  // e.g. "2*t^3-t+1", "0"

  // primitive gcd with positive leading coefficient (subresultant-free
  // primitive Euclidean remainder sequence; fine at the degrees seen here)
  static Poly gcd(Poly a, Poly b);
  // exact division; throws std::domain_error if the division has a remainder
  static Poly div_exact(const Poly& a, const Poly& b);

private:
  void trim();
  std::vector<BigInt> c_;  // c_[k] multiplies t^k, no trailing zeros
};

// Reduced ratio of integer-coefficient polynomials in t.  Invariants: the
// denominator is nonzero, numerator and denominator have unit polynomial gcd
// and coprime integer contents, and the denominator's leading coefficient is
// positive.  Equal values always have identical representations.
class ExactScalar {
public:
  ExactScalar() : num_(), den_(BigInt(1)) {}  // zero
  ExactScalar(long long value) : ExactScalar(BigInt(value)) {}
  explicit ExactScalar(const BigInt& value) : num_(value), den_(BigInt(1)) {}
  explicit ExactScalar(const Rational& value);
  ExactScalar(const Poly& num, const Poly& den);

  static ExactScalar t();    // the scale variable itself
  static ExactScalar eps();  // t^2

  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }
  bool is_zero() const { return num_.is_zero(); }
  bool is_constant() const { return num_.degree() <= 0 && den_.degree() == 0; }

  ExactScalar operator+(const ExactScalar& o) const;
  ExactScalar operator-(const ExactScalar& o) const;
  ExactScalar operator*(const ExactScalar& o) const;
  ExactScalar operator/(const ExactScalar& o) const;  // throws on /0
  ExactScalar operator-() const;
  ExactScalar& operator+=(const ExactScalar& o) { return *this = *this + o; }
  ExactScalar& operator-=(const ExactScalar& o) { return *this = *this - o; }
  ExactScalar& operator*=(const ExactScalar& o) { return *this = *this * o; }
  bool operator==(const ExactScalar& o) const;
  bool operator!=(const ExactScalar& o) const { return !(*this == o); }

  // evaluation at a rational point; throws std::domain_error at a pole
  Rational eval(const Rational& t0) const;

  struct Limit {
    bool finite = true;
    Rational value;      // meaningful when finite
    int pole_order = 0;  // meaningful when !finite
  };
  // behaviour as t -> 0+: either a finite rational value or a pole order
  Limit limit_at_zero() const;

  // valuation at t=0 (order of vanishing; negative at a pole); the zero
  // scalar returns INT_MAX
  int t_order() const;

  // canonical rendering "P(t)" or "(P(t))/(Q(t))"
  std::string str() const;

private:
  void reduce();
  Poly num_, den_;
};

inline ExactScalar operator*(long long k, const ExactScalar& s) {
  return ExactScalar(k) * s;
}

// rational -> double, for handing exact results to numeric layers
double to_double(const Rational& r);

}  // namespace folia
