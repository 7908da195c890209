#include "folia/frame_model.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace folia {

namespace {

std::string triple(int a, int b, int k) {
  std::ostringstream os;
  os << "(" << a << "," << b << "," << k << ")";
  return os.str();
}

std::string pair_str(int a, int b) {
  std::ostringstream os;
  os << "(" << a << "," << b << ")";
  return os.str();
}

// aggregate a law over many components, remembering the first failure
struct LawAccum {
  std::string law;
  explicit LawAccum(std::string l) : law(std::move(l)) {}
  long checked = 0;
  bool pass = true;
  std::string subject, detail;
  void check(bool ok, const std::string& subj, const std::string& det) {
    ++checked;
    if (ok || !pass) return;
    pass = false;
    subject = subj;
    detail = det;
  }
  void push(CheckReport& rep) const {
    rep.add(law, pass ? "all" : subject, pass,
            pass ? std::to_string(checked) + " components" : detail);
  }
};

std::string mismatch(const ExactScalar& lhs, const ExactScalar& rhs) {
  return "lhs=" + lhs.str() + " rhs=" + rhs.str();
}

std::string mismatch(const Rational& lhs, const Rational& rhs) {
  std::ostringstream os;
  os << "lhs=" << lhs << " rhs=" << rhs;
  return os.str();
}

}  // namespace

RatMat RatMat::identity(int n) {
  RatMat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

RatMat RatMat::operator+(const RatMat& o) const {
  RatMat r(r_, c_);
  for (size_t i = 0; i < v_.size(); ++i) r.v_[i] = v_[i] + o.v_[i];
  return r;
}

RatMat RatMat::operator-(const RatMat& o) const {
  RatMat r(r_, c_);
  for (size_t i = 0; i < v_.size(); ++i) r.v_[i] = v_[i] - o.v_[i];
  return r;
}

RatMat RatMat::operator*(const RatMat& o) const {
  RatMat r(r_, o.c_);
  for (int i = 0; i < r_; ++i)
    for (int k = 0; k < c_; ++k) {
      const Rational& a = (*this)(i, k);
      if (a == 0) continue;
      for (int j = 0; j < o.c_; ++j) r(i, j) += a * o(k, j);
    }
  return r;
}

RatMat RatMat::operator*(const Rational& s) const {
  RatMat r(r_, c_);
  for (size_t i = 0; i < v_.size(); ++i) r.v_[i] = v_[i] * s;
  return r;
}

bool RatMat::is_zero() const {
  for (const auto& x : v_)
    if (x != 0) return false;
  return true;
}

RatMat RatMat::transpose() const {
  RatMat r(c_, r_);
  for (int i = 0; i < r_; ++i)
    for (int j = 0; j < c_; ++j) r(j, i) = (*this)(i, j);
  return r;
}

LieFrameModel LieFrameModel::make(int n, int p, Tensor3<Rational> c, std::string name) {
  LieFrameModel m = make_unchecked(n, p, std::move(c), std::move(name));
  m.validate();
  return m;
}

LieFrameModel LieFrameModel::make_unchecked(int n, int p, Tensor3<Rational> c,
                                            std::string name) {
  LieFrameModel m;
  m.n = n;
  m.p = p;
  m.c = std::move(c);
  m.name = std::move(name);
  return m;
}

void LieFrameModel::validate() const {
  if (n < 1 || p < 0 || p > n)
    throw std::invalid_argument("frame model: need 0 <= p <= n, n >= 1");
  if (c.dim() != n) throw std::invalid_argument("frame model: bracket table has wrong size");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (c(i, j, k) != -c(j, i, k))
          throw std::invalid_argument("frame model: brackets not antisymmetric at " +
                                      triple(i, j, k));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          Rational s = 0;
          for (int m = 0; m < n; ++m)
            s += c(i, j, m) * c(m, k, l) + c(j, k, m) * c(m, i, l) + c(k, i, m) * c(m, j, l);
          if (s != 0)
            throw std::invalid_argument("frame model: Jacobi identity fails at (" +
                                        std::to_string(i) + "," + std::to_string(j) + "," +
                                        std::to_string(k) + ") component " + std::to_string(l));
        }
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      for (int k = p; k < n; ++k)
        if (c(i, j, k) != 0)
          throw std::invalid_argument(
              "frame model: leaf distribution not closed under brackets at " + triple(i, j, k));
}

LieFrameModel LieFrameModel::abelian(int n, int p) {
  return make(n, p, Tensor3<Rational>(n), "abelian");
}

LieFrameModel LieFrameModel::kodaira_thurston(bool leaves_contain_center) {
  Tensor3<Rational> c(4);
  if (leaves_contain_center) {
    // leaves span the center and the flat direction; [e2,e3] = e0
    c(2, 3, 0) = 1;
    c(3, 2, 0) = -1;
    return make(4, 2, std::move(c), "kodaira_thurston_rigid");
  }
  // leaves span one generator and the flat direction; [e0,e2] = e3
  c(0, 2, 3) = 1;
  c(2, 0, 3) = -1;
  return make(4, 2, std::move(c), "kodaira_thurston_deforming");
}

LieFrameModel random_two_step_model(std::mt19937_64& rng, int n, int p, bool dyadic) {
  if (p < 1 || p >= n) throw std::invalid_argument("random_two_step_model: need 1 <= p < n");
  // layout: index 0 = generator inside the leaves, 1..p-1 = central inside
  // the leaves, p..p+g-2 = remaining generators, rest = remaining centrals
  int zmin = std::max(1, p - 1), zmax = n - 2;
  if (zmin > zmax) throw std::invalid_argument("random_two_step_model: n too small for p");
  std::uniform_int_distribution<int> zdist(zmin, zmax);
  auto coeff = [&]() -> Rational {
    if (dyadic) {
      std::uniform_int_distribution<int> d(-2, 2);
      return Rational(d(rng), 2);
    }
    std::uniform_int_distribution<int> num(-2, 2), den(1, 3);
    return Rational(num(rng), den(rng));
  };
  for (int attempt = 0; attempt < 64; ++attempt) {
    int z = zdist(rng);
    int g = n - z;
    std::vector<int> gens, centrals;
    gens.push_back(0);
    for (int k = p; k < p + g - 1; ++k) gens.push_back(k);
    for (int k = 1; k < p; ++k) centrals.push_back(k);
    for (int k = p + g - 1; k < n; ++k) centrals.push_back(k);
    Tensor3<Rational> c(n);
    bool nonzero = false;
    for (size_t a = 0; a < gens.size(); ++a)
      for (size_t b = a + 1; b < gens.size(); ++b)
        for (int k : centrals) {
          Rational v = coeff();
          if (v == 0) continue;
          c(gens[a], gens[b], k) = v;
          c(gens[b], gens[a], k) = -v;
          nonzero = true;
        }
    if (!nonzero) continue;
    return LieFrameModel::make(n, p, std::move(c), "random_two_step");
  }
  throw std::runtime_error("random_two_step_model: could not draw a nonzero model");
}

// --- connection engine ---------------------------------------------------

FrameConnection frame_connection(const LieFrameModel& m) {
  const int n = m.n, p = m.p;
  FrameConnection fc;
  fc.n = n;
  fc.p = p;
  fc.x = Tensor3<ExactScalar>(n);
  fc.base = Tensor3<Rational>(n);
  fc.gammaE = Tensor3<ExactScalar>(n);
  fc.cE = Tensor3<ExactScalar>(n);

  const ExactScalar one(1), t = ExactScalar::t();
  const ExactScalar t2 = t * t;
  const ExactScalar inv_t2 = one / t2;
  auto leaf = [p](int a) { return a < p; };
  // ratio of metric weights <.,e_a> / <.,e_k> under the rescaled metric
  auto mratio = [&](int a, int k) -> const ExactScalar& {
    if (leaf(a) == leaf(k)) return one;
    return leaf(a) ? t2 : inv_t2;
  };
  const Rational half(1, 2);

  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n; ++k) {
        fc.base(a, b, k) = half * (m.c(a, b, k) - m.c(b, k, a) + m.c(k, a, b));
        // Koszul for frame-constant fields under the rescaled metric, paired
        // back with the unscaled one
        ExactScalar v = ExactScalar(Rational(m.c(a, b, k))) -
                        mratio(a, k) * ExactScalar(Rational(m.c(b, k, a))) +
                        mratio(b, k) * ExactScalar(Rational(m.c(k, a, b)));
        fc.x(a, b, k) = ExactScalar(Rational(1, 2)) * v;
      }

  auto scale = [&](int a) -> const ExactScalar& { return leaf(a) ? one : t; };
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n; ++k) {
        ExactScalar f = scale(a) * scale(b) / scale(k);
        fc.gammaE(a, b, k) = f * fc.x(a, b, k);
        fc.cE(a, b, k) = f * ExactScalar(Rational(m.c(a, b, k)));
      }
  return fc;
}

Tensor3<ExactScalar> koszul_connection(const LieFrameModel& m) {
  return frame_connection(m).gammaE;
}

Tensor3<Rational> bott_connection(const LieFrameModel& m) {
  Tensor3<Rational> dot(m.n);
  for (int x = 0; x < m.p; ++x)
    for (int u = m.p; u < m.n; ++u)
      for (int v = m.p; v < m.n; ++v) dot(x, u, v) = m.c(x, u, v);
  return dot;
}

Tensor3<Rational> omega_tensor(const LieFrameModel& m) {
  FrameConnection fc = frame_connection(m);
  Tensor3<Rational> w(m.n);
  for (int x = 0; x < m.p; ++x)
    for (int u = m.p; u < m.n; ++u)
      for (int v = m.p; v < m.n; ++v)
        w(x, u, v) = -(fc.base(u, v, x) + fc.base(v, u, x));
  return w;
}

CheckReport verify_rescaling_laws(const LieFrameModel& m) {
  const int n = m.n, p = m.p;
  FrameConnection fc = frame_connection(m);
  CheckReport rep{"rescaling_laws", m.name, {}};
  const ExactScalar t2 = ExactScalar::eps();
  const ExactScalar half(Rational(1, 2));

  LawAccum eps_one("eps_one_reduction");
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n; ++k) {
        Rational at_one = fc.x(a, b, k).eval(Rational(1));
        eps_one.check(at_one == fc.base(a, b, k), triple(a, b, k),
                      mismatch(at_one, fc.base(a, b, k)));
      }
  eps_one.push(rep);

  LawAccum leaf_inv("leaf_block_invariance");
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < p; ++b)
      for (int k = 0; k < p; ++k) {
        ExactScalar rhs{fc.base(a, b, k)};
        leaf_inv.check(fc.x(a, b, k) == rhs, triple(a, b, k), mismatch(fc.x(a, b, k), rhs));
      }
  leaf_inv.push(rep);

  LawAccum mixed_inv("mixed_fp_block_invariance");
  for (int a = 0; a < p; ++a)
    for (int b = p; b < n; ++b)
      for (int k = 0; k < p; ++k) {
        ExactScalar rhs{fc.base(a, b, k)};
        mixed_inv.check(fc.x(a, b, k) == rhs, triple(a, b, k), mismatch(fc.x(a, b, k), rhs));
      }
  mixed_inv.push(rep);

  // <X, nabla_V U + nabla_U V> at t = 1
  auto sym_grad = [&](int v, int u, int x) { return fc.base(v, u, x) + fc.base(u, v, x); };

  LawAccum trans_pair("transverse_pair_expansion");
  for (int v = p; v < n; ++v)
    for (int u = p; u < n; ++u)
      for (int x = 0; x < p; ++x) {
        ExactScalar g{sym_grad(v, u, x)};
        ExactScalar rhs = ExactScalar(fc.base(v, u, x)) - half * g +
                          half * (ExactScalar(1) / t2) * g;
        trans_pair.check(fc.x(v, u, x) == rhs, triple(v, u, x), mismatch(fc.x(v, u, x), rhs));
      }
  trans_pair.push(rep);

  LawAccum fp_scaling("fp_block_eps_scaling");
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b)
      for (int k = p; k < n; ++k) {
        ExactScalar rhs = t2 * ExactScalar(fc.base(a, b, k));
        fp_scaling.check(fc.x(a, b, k) == rhs, triple(a, b, k), mismatch(fc.x(a, b, k), rhs));
      }
  fp_scaling.push(rep);

  LawAccum trans_leaf("transverse_leaf_mixed_law");
  for (int v = p; v < n; ++v)
    for (int y = 0; y < p; ++y)
      for (int u = p; u < n; ++u) {
        ExactScalar rhs = -half * ExactScalar(sym_grad(v, u, y)) +
                          half * t2 * ExactScalar(Rational(m.c(u, v, y)));
        trans_leaf.check(fc.x(v, y, u) == rhs, triple(v, y, u), mismatch(fc.x(v, y, u), rhs));
      }
  trans_leaf.push(rep);

  LawAccum trans_inv("transverse_block_invariance");
  for (int a = p; a < n; ++a)
    for (int b = p; b < n; ++b)
      for (int k = p; k < n; ++k) {
        ExactScalar rhs{fc.base(a, b, k)};
        trans_inv.check(fc.x(a, b, k) == rhs, triple(a, b, k), mismatch(fc.x(a, b, k), rhs));
      }
  trans_inv.push(rep);

  LawAccum leaf_trans("leaf_transverse_mixed_law");
  for (int x = 0; x < p; ++x)
    for (int u = p; u < n; ++u)
      for (int v = p; v < n; ++v) {
        ExactScalar rhs = ExactScalar(Rational(m.c(x, u, v))) -
                          half * ExactScalar(sym_grad(v, u, x)) -
                          half * t2 * ExactScalar(Rational(m.c(u, v, x)));
        leaf_trans.check(fc.x(x, u, v) == rhs, triple(x, u, v), mismatch(fc.x(x, u, v), rhs));
      }
  leaf_trans.push(rep);

  return rep;
}

CheckReport adiabatic_limit_check(const LieFrameModel& m) {
  const int n = m.n, p = m.p;
  FrameConnection fc = frame_connection(m);
  Tensor3<Rational> dot = bott_connection(m);
  Tensor3<Rational> w = omega_tensor(m);
  CheckReport rep{"adiabatic_limit", m.name, {}};
  LawAccum limit_law("adiabatic_limit_bott_unitary");
  LawAccum order_law("adiabatic_convergence_order");
  for (int x = 0; x < p; ++x)
    for (int u = p; u < n; ++u)
      for (int v = p; v < n; ++v) {
        const ExactScalar& a = fc.x(x, u, v);
        auto lim = a.limit_at_zero();
        if (!lim.finite)
          throw std::domain_error("adiabatic limit diverges at " + triple(x, u, v) +
                                  " (pole order " + std::to_string(lim.pole_order) + ")");
        Rational expect = dot(x, u, v) + Rational(1, 2) * w(x, u, v);
        limit_law.check(lim.value == expect, triple(x, u, v), mismatch(lim.value, expect));
        ExactScalar diff = a - ExactScalar(expect);
        order_law.check(diff.t_order() >= 2, triple(x, u, v),
                        "order " + std::to_string(diff.t_order()) + " term " + diff.str());
      }
  limit_law.push(rep);
  order_law.push(rep);
  return rep;
}

CheckReport omega_five_term_check(const LieFrameModel& m) {
  const int n = m.n, p = m.p;
  FrameConnection fc = frame_connection(m);
  Tensor3<Rational> w = omega_tensor(m);
  CheckReport rep{"omega_tensor", m.name, {}};
  LawAccum def_law("omega_metric_derivative_definition");
  LawAccum five_law("five_term_omega");
  LawAccum cancel_law("metric_compat_cancellation");
  LawAccum sym_law("omega_symmetry");
  for (int x = 0; x < p; ++x)
    for (int u = p; u < n; ++u)
      for (int v = p; v < n; ++v) {
        // definition: derivative of the transverse metric along the partial
        // connection (frame metric constant, so only bracket terms survive)
        Rational def = -(m.c(x, u, v) + m.c(x, v, u));
        def_law.check(w(x, u, v) == def, triple(x, u, v), mismatch(w(x, u, v), def));
        Rational t1 = -fc.base(u, v, x), t2 = -fc.base(v, u, x);
        Rational t3 = -fc.base(x, v, u), t4 = -fc.base(x, u, v);
        five_law.check(t1 + t2 + t3 + t4 == w(x, u, v), triple(x, u, v),
                       mismatch(t1 + t2 + t3 + t4, w(x, u, v)));
        cancel_law.check(t3 + t4 == 0, triple(x, u, v), mismatch(t3 + t4, Rational(0)));
        sym_law.check(w(x, u, v) == w(x, v, u), triple(x, u, v),
                      mismatch(w(x, u, v), w(x, v, u)));
      }
  def_law.push(rep);
  five_law.push(rep);
  cancel_law.push(rep);
  sym_law.push(rep);
  return rep;
}

ExactScalar& FrameCurvature::at(int a, int b, int c, int d) {
  return r4[((static_cast<size_t>(a) * n + b) * n + c) * n + d];
}
const ExactScalar& FrameCurvature::at(int a, int b, int c, int d) const {
  return r4[((static_cast<size_t>(a) * n + b) * n + c) * n + d];
}

FrameCurvature frame_curvature(const LieFrameModel& m) {
  const int n = m.n, p = m.p;
  FrameConnection fc = frame_connection(m);
  FrameCurvature cur;
  cur.n = n;
  cur.p = p;
  cur.r4.assign(static_cast<size_t>(n) * n * n * n, ExactScalar());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          ExactScalar s;
          for (int k = 0; k < n; ++k) {
            s += fc.x(b, c, k) * fc.x(a, k, d) - fc.x(a, c, k) * fc.x(b, k, d);
            if (m.c(a, b, k) != 0)
              s -= ExactScalar(Rational(m.c(a, b, k))) * fc.x(k, c, d);
          }
          cur.at(a, b, c, d) = s;
        }
  const ExactScalar t2 = ExactScalar::eps();
  ExactScalar k;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (b < p) k += cur.at(a, b, b, a);
      else k += t2 * cur.at(a, b, b, a);
    }
  cur.scalar = k;
  return cur;
}

namespace {

// curvature composed from a restricted connection table (rational, t = 1)
Rational restricted_r4(const LieFrameModel& m, const Tensor3<Rational>& tab, int a, int b,
                       int c, int d) {
  Rational s = 0;
  for (int k = 0; k < m.n; ++k) {
    s += tab(b, c, k) * tab(a, k, d) - tab(a, c, k) * tab(b, k, d);
    s -= m.c(a, b, k) * tab(k, c, d);
  }
  return s;
}

}  // namespace

CheckReport verify_curvature_expansion(const LieFrameModel& m) {
  const int n = m.n, p = m.p;
  FrameConnection fc = frame_connection(m);
  FrameCurvature cur = frame_curvature(m);
  Tensor3<Rational> w = omega_tensor(m);
  CheckReport rep{"curvature_expansion", m.name, {}};
  const ExactScalar t2 = ExactScalar::eps();
  const ExactScalar half(Rational(1, 2));

  // leaf-restricted and transverse-restricted connections at t = 1
  Tensor3<Rational> tf(n), tp(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n; ++k) {
        if (b < p && k < p) tf(a, b, k) = fc.base(a, b, k);
        if (b >= p && k >= p) tp(a, b, k) = fc.base(a, b, k);
      }

  LawAccum leaf_law("curv_leaf_block_expansion");
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      Rational A = 0, B = 0;  // second-fundamental-form corrections
      for (int v = p; v < n; ++v) {
        A += fc.base(j, j, v) * fc.base(i, i, v);
        B += fc.base(i, j, v) * fc.base(j, i, v);
      }
      ExactScalar lhs = cur.at(i, j, i, j);
      ExactScalar rhs = ExactScalar(restricted_r4(m, tf, i, j, i, j)) + t2 * ExactScalar(A - B);
      leaf_law.check(lhs == rhs, pair_str(i, j), mismatch(lhs, rhs));
    }
  leaf_law.push(rep);

  LawAccum mixed_law("curv_mixed_block_expansion");
  for (int i = 0; i < p; ++i)
    for (int s = p; s < n; ++s) {
      ExactScalar lhs = cur.at(i, s, i, s);
      Rational r1 = 0, r2 = 0, r3 = 0, r5 = 0, r6 = 0, r7 = 0;
      for (int mm = 0; mm < p; ++mm) {
        r1 += fc.base(s, i, mm) * fc.base(i, s, mm);
        r2 += m.c(i, s, mm) * fc.base(mm, i, s);
        r6 += fc.base(i, i, mm) * fc.base(s, s, mm);
      }
      for (int v = p; v < n; ++v) {
        r3 += m.c(i, s, v) * m.c(s, v, i);
        r5 += fc.base(i, i, v) * fc.base(s, v, s);
        r7 += m.c(i, s, v) * (fc.base(s, v, i) + fc.base(v, s, i));
      }
      ExactScalar t4, t8, t9;
      for (int v = p; v < n; ++v) {
        const ExactScalar& comp = fc.x(s, i, v);  // rescaled mixed projection
        t4 += half * t2 * comp * ExactScalar(Rational(m.c(s, v, i)));
        t8 += comp * ExactScalar(Rational(m.c(i, v, s)));
        t9 -= half * comp * ExactScalar(fc.base(v, s, i) + fc.base(s, v, i));
      }
      ExactScalar rhs = -t2 * ExactScalar(r1) - t2 * ExactScalar(r2) -
                        half * t2 * ExactScalar(r3) + t4 - t2 * ExactScalar(r5) +
                        ExactScalar(r6) + half * ExactScalar(r7) + t8 + t9;
      mixed_law.check(lhs == rhs, pair_str(i, s), mismatch(lhs, rhs));
    }
  mixed_law.push(rep);

  // Transverse-pair curvature.  The exact expansion against the t=1 bundle
  // curvature carries a 1/eps second-fundamental-form term that the closed
  // form in the source derivation drops; both the exact identity and the
  // precise gap against that shorter form are verified.
  LawAccum trans_law("curv_transverse_block_expansion");
  LawAccum trans_gap("curv_transverse_shortform_gap");
  const ExactScalar three_quarter(Rational(3, 4));
  for (int s = p; s < n; ++s)
    for (int t = p; t < n; ++t) {
      ExactScalar lhs = cur.at(s, t, s, t);
      Rational bsum = 0, wsum = 0, zsum = 0;
      for (int mm = 0; mm < p; ++mm) {
        Rational g = fc.base(s, t, mm) + fc.base(t, s, mm);
        bsum += fc.base(s, s, mm) * fc.base(t, t, mm) - g * g / 4;
        wsum += m.c(s, t, mm) * g;
        zsum += m.c(s, t, mm) * m.c(s, t, mm);
      }
      ExactScalar r4p{restricted_r4(m, tp, s, t, s, t)};
      ExactScalar rhs = r4p + ExactScalar(bsum) / t2 +
                        (three_quarter * t2 - half) * ExactScalar(zsum);
      trans_law.check(lhs == rhs, pair_str(s, t), mismatch(lhs, rhs));
      ExactScalar short_rhs =
          r4p + half * ExactScalar(wsum) - (half - t2) * ExactScalar(zsum);
      ExactScalar gap = ExactScalar(bsum) / t2 - half * ExactScalar(wsum) -
                        half * half * t2 * ExactScalar(zsum);
      trans_gap.check(lhs - short_rhs == gap, pair_str(s, t),
                      mismatch(lhs - short_rhs, gap));
    }
  trans_law.push(rep);
  trans_gap.push(rep);

  LawAccum proj_law("mixed_projection_expansion");
  for (int u = p; u < n; ++u)
    for (int i = 0; i < p; ++i)
      for (int v = p; v < n; ++v) {
        ExactScalar rhs = half * ExactScalar(w(i, u, v)) -
                          half * t2 * ExactScalar(Rational(m.c(u, v, i)));
        proj_law.check(fc.x(u, i, v) == rhs, triple(u, i, v), mismatch(fc.x(u, i, v), rhs));
      }
  proj_law.push(rep);

  LawAccum pair_sym("mixed_pair_symmetry");
  for (int i = 0; i < p; ++i)
    for (int s = p; s < n; ++s) {
      ExactScalar lhs = t2 * cur.at(i, s, s, i);
      pair_sym.check(lhs == cur.at(s, i, i, s), pair_str(i, s),
                     mismatch(lhs, cur.at(s, i, i, s)));
    }
  pair_sym.push(rep);

  LawAccum split_law("scalar_curvature_split");
  {
    ExactScalar ff, pp, mixed;
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) ff += cur.at(i, j, j, i);
    for (int s = p; s < n; ++s)
      for (int t = p; t < n; ++t) pp += cur.at(s, t, t, s);
    for (int i = 0; i < p; ++i)
      for (int s = p; s < n; ++s) mixed += cur.at(s, i, i, s);
    ExactScalar rhs = ff + t2 * pp + ExactScalar(2) * mixed;
    split_law.check(cur.scalar == rhs, "scalar", mismatch(cur.scalar, rhs));
  }
  split_law.push(rep);

  return rep;
}

CheckReport flatness_and_omega_identities(const LieFrameModel& m) {
  const int p = m.p, q = m.q();
  Tensor3<Rational> w = omega_tensor(m);
  CheckReport rep{"flatness_omega", m.name, {}};

  // matrices acting on the transverse block; column u holds the image of e_u
  auto bott_mat = [&](int x) {
    RatMat M(q, q);
    for (int u = 0; u < q; ++u)
      for (int v = 0; v < q; ++v) M(v, u) = m.c(x, p + u, p + v);
    return M;
  };
  auto omega_mat = [&](int x) {
    RatMat W(q, q);
    for (int u = 0; u < q; ++u)
      for (int v = 0; v < q; ++v) W(v, u) = w(x, p + u, p + v);
    return W;
  };
  std::vector<RatMat> M(p), W(p);
  for (int x = 0; x < p; ++x) {
    M[x] = bott_mat(x);
    W[x] = omega_mat(x);
  }

  LawAccum flat_law("bott_flatness");
  LawAccum domega_law("omega_derivative_identity");
  LawAccum unit_law("unitary_curvature_identity");
  const Rational half(1, 2), quarter(1, 4);
  for (int x = 0; x < p; ++x)
    for (int y = 0; y < p; ++y) {
      RatMat curv = RatMat::commutator(M[x], M[y]);
      RatMat dW = RatMat::commutator(M[x], W[y]) - RatMat::commutator(M[y], W[x]);
      RatMat Ux = M[x] + W[x] * half, Uy = M[y] + W[y] * half;
      RatMat curvU = RatMat::commutator(Ux, Uy);
      for (int mm = 0; mm < p; ++mm) {
        if (m.c(x, y, mm) == 0) continue;
        curv = curv - bott_mat(mm) * Rational(m.c(x, y, mm));
        dW = dW - omega_mat(mm) * Rational(m.c(x, y, mm));
        RatMat Um = bott_mat(mm) + omega_mat(mm) * half;
        curvU = curvU - Um * Rational(m.c(x, y, mm));
      }
      RatMat ww = RatMat::commutator(W[x], W[y]);
      flat_law.check(curv.is_zero(), pair_str(x, y), "nonzero partial-connection curvature");
      domega_law.check((dW + ww).is_zero(), pair_str(x, y), "derivative identity fails");
      curvU = curvU + ww * quarter;
      unit_law.check(curvU.is_zero(), pair_str(x, y), "unitarized curvature identity fails");
    }
  flat_law.push(rep);
  domega_law.push(rep);
  unit_law.push(rep);
  return rep;
}

CheckReport s_tensor_check(const LieFrameModel& m) {
  const int n = m.n, p = m.p;
  FrameConnection fc = frame_connection(m);
  CheckReport rep{"s_tensor", m.name, {}};
  LawAccum recon("s_tensor_reconstruction");
  LawAccum exchange("s_tensor_block_exchange");
  LawAccum skew("s_tensor_skew_adjoint");
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n; ++k) {
        bool bleaf = b < p, kleaf = k < p;
        Rational s = (bleaf != kleaf) ? fc.base(a, b, k) : Rational(0);
        Rational tf = (bleaf && kleaf) ? fc.base(a, b, k) : Rational(0);
        Rational tp = (!bleaf && !kleaf) ? fc.base(a, b, k) : Rational(0);
        recon.check(tf + tp + s == fc.base(a, b, k), triple(a, b, k),
                    mismatch(tf + tp + s, fc.base(a, b, k)));
        if (bleaf == kleaf)
          exchange.check(s == 0, triple(a, b, k), "same-block component present");
        Rational s_swapped = (bleaf != kleaf) ? fc.base(a, k, b) : Rational(0);
        skew.check(s == -s_swapped, triple(a, b, k), mismatch(s, -s_swapped));
      }
  recon.push(rep);
  exchange.push(rep);
  skew.push(rep);
  return rep;
}

CheckReport verify_frame_suite(const LieFrameModel& m) {
  CheckReport rep{"frame_suite", m.name, {}};
  rep.merge(verify_rescaling_laws(m));
  rep.merge(omega_five_term_check(m));
  rep.merge(adiabatic_limit_check(m));
  rep.merge(verify_curvature_expansion(m));
  rep.merge(flatness_and_omega_identities(m));
  rep.merge(s_tensor_check(m));
  return rep;
}

FrameEval evaluate_frame_geometry(const LieFrameModel& m, const Rational& t) {
  if (t <= 0) throw std::invalid_argument("evaluate_frame_geometry: need t > 0");
  const int n = m.n, p = m.p, q = m.q();
  FrameConnection fc = frame_connection(m);
  FrameCurvature cur = frame_curvature(m);
  FrameEval ev;
  ev.n = n;
  ev.p = p;
  ev.t = t;
  ev.gammaE = Tensor3<Rational>(n);
  ev.cE = Tensor3<Rational>(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n; ++k) {
        ev.gammaE(a, b, k) = fc.gammaE(a, b, k).eval(t);
        ev.cE(a, b, k) = fc.cE(a, b, k).eval(t);
      }
  ev.k_scalar = cur.scalar.eval(t);
  ev.rperp.assign(static_cast<size_t>(n) * n, RatMat(q, q));
  std::vector<RatMat> A(n, RatMat(q, q));
  for (int a = 0; a < n; ++a)
    for (int s = 0; s < q; ++s)
      for (int tt = 0; tt < q; ++tt) A[a](tt, s) = ev.gammaE(a, p + s, p + tt);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      RatMat R = RatMat::commutator(A[a], A[b]);
      for (int mm = 0; mm < n; ++mm)
        if (ev.cE(a, b, mm) != 0) R = R - A[mm] * ev.cE(a, b, mm);
      ev.rperp[static_cast<size_t>(a) * n + b] = R;
    }
  return ev;
}

}  // namespace folia
