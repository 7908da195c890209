#pragma once

#include <random>
#include <string>
#include <vector>

#include "folia/exact.hpp"
#include "folia/report.hpp"

// Homogeneous frame models: an n-dimensional space carrying a global frame
// e_0..e_{n-1} with constant structure constants [e_i,e_j] = sum_k c_ijk e_k
// and the metric that makes the frame orthonormal.  The first p frame
// directions span an integrable distribution F (the leaves); the remaining
// q = n-p span its orthogonal complement.  The rescaled metric family keeps
// the leaf block and multiplies the complement block by 1/eps, eps = t^2,
// so {e_i, t e_s} is an orthonormal frame for the rescaled metric.
//
// Everything here is exact: connection coefficients are rational functions
// of t, curvature identities are checked as identities in t.

namespace folia {

template <class T>
class Tensor3 {
public:
  Tensor3() = default;
  explicit Tensor3(int n) : n_(n), v_(static_cast<size_t>(n) * n * n) {}
  T& operator()(int a, int b, int k) { return v_[(static_cast<size_t>(a) * n_ + b) * n_ + k]; }
  const T& operator()(int a, int b, int k) const {
    return v_[(static_cast<size_t>(a) * n_ + b) * n_ + k];
  }
  int dim() const { return n_; }

private:
  int n_ = 0;
  std::vector<T> v_;
};

// dense matrix over exact rationals (small: blocks of frame indices)
class RatMat {
public:
  RatMat() = default;
  RatMat(int rows, int cols) : r_(rows), c_(cols), v_(static_cast<size_t>(rows) * cols) {}
  static RatMat identity(int n);
  Rational& operator()(int i, int j) { return v_[static_cast<size_t>(i) * c_ + j]; }
  const Rational& operator()(int i, int j) const { return v_[static_cast<size_t>(i) * c_ + j]; }
  int rows() const { return r_; }
  int cols() const { return c_; }
  RatMat operator+(const RatMat& o) const;
  RatMat operator-(const RatMat& o) const;
  RatMat operator*(const RatMat& o) const;
  RatMat operator*(const Rational& s) const;
  bool operator==(const RatMat& o) const { return r_ == o.r_ && c_ == o.c_ && v_ == o.v_; }
  bool is_zero() const;
  RatMat transpose() const;
  static RatMat commutator(const RatMat& a, const RatMat& b) { return a * b - b * a; }

private:
  int r_ = 0, c_ = 0;
  std::vector<Rational> v_;
};

struct LieFrameModel {
  int n = 0;
  int p = 0;  // leaf directions are frame indices 0..p-1
  Tensor3<Rational> c;
  bool oriented_leaves = true;
  bool oriented_transverse = true;
  std::string name;

  int q() const { return n - p; }

  // validated constructor: antisymmetry, Jacobi, leaf-closure of brackets
  static LieFrameModel make(int n, int p, Tensor3<Rational> c, std::string name = "");
  // skips validation; for tests that need deliberately broken models
  static LieFrameModel make_unchecked(int n, int p, Tensor3<Rational> c, std::string name = "");
  void validate() const;  // throws std::invalid_argument naming the violation

  static LieFrameModel abelian(int n, int p);
  // Heisenberg x line: [e0,e1] = e2.  Two natural leaf choices:
  // span{e2,e3} (transversely rigid) and span{e0,e3} (genuinely deforming).
  static LieFrameModel kodaira_thurston(bool leaves_contain_center);
};

// uniformly random two-step model: generator directions, central directions,
// random brackets generators x generators -> center (Jacobi is automatic),
// leaves = at most one generator plus central directions (always closed).
// dyadic = true restricts structure constants to multiples of 1/2 so that
// downstream double arithmetic stays exact.
LieFrameModel random_two_step_model(std::mt19937_64& rng, int n, int p, bool dyadic);

// --- connection engine ---------------------------------------------------

// All tables are 0-based with a,b,k running over all n frame indices.
struct FrameConnection {
  int n = 0, p = 0;
  // x(a,b,k) = <nabla^{eps}_{e_a} e_b, e_k> paired with the UNSCALED metric,
  // as an exact function of t
  Tensor3<ExactScalar> x;
  // unscaled Levi-Civita coefficients <nabla_{e_a} e_b, e_k> (t = 1)
  Tensor3<Rational> base;
  // coefficients in the rescaled orthonormal frame {e_i, t e_s}:
  // gammaE(a,b,k) = <nabla^{eps}_{E_a} E_b, E_k>_eps
  Tensor3<ExactScalar> gammaE;
  // bracket coefficients in the rescaled frame: [E_a,E_b] = sum cE(a,b,m) E_m
  Tensor3<ExactScalar> cE;
};

FrameConnection frame_connection(const LieFrameModel& m);

// the rescaled-orthonormal-frame connection table alone
Tensor3<ExactScalar> koszul_connection(const LieFrameModel& m);

// leafwise partial connection on the complement: dot(x,u,v) coefficient of
// e_v in p_perp[e_x, e_u]  (x < p; u,v >= p, absolute frame indices)
Tensor3<Rational> bott_connection(const LieFrameModel& m);

// omega(x)(u,v) = -<nabla_u e_v + nabla_v e_u, e_x>, the transverse metric
// derivative along the leaves (x < p; u,v >= p, absolute frame indices)
Tensor3<Rational> omega_tensor(const LieFrameModel& m);

// eight exact laws relating the rescaled connection to t=1 data
CheckReport verify_rescaling_laws(const LieFrameModel& m);

// t->0 limits of the complement connection along leaf directions equal the
// partial connection plus half the omega correction; convergence is O(t^2)
CheckReport adiabatic_limit_check(const LieFrameModel& m);

// five-term expansion of omega: the derivative terms cancel exactly and the
// remaining two terms reproduce omega_tensor
CheckReport omega_five_term_check(const LieFrameModel& m);

// curvature of the rescaled metric --------------------------------------

struct FrameCurvature {
  int n = 0, p = 0;
  // r4(a,b,c,d) = <R^eps(e_a,e_b) e_c, e_d> paired with the unscaled metric,
  // R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y]
  std::vector<ExactScalar> r4;
  ExactScalar& at(int a, int b, int c, int d);
  const ExactScalar& at(int a, int b, int c, int d) const;
  // scalar curvature of the rescaled metric as an exact function of t
  // (positive on round spheres)
  ExactScalar scalar;
};

FrameCurvature frame_curvature(const LieFrameModel& m);

// block expansions of the rescaled curvature against t=1 data, the
// mixed-projection law, and the scalar-curvature block decomposition
CheckReport verify_curvature_expansion(const LieFrameModel& m);

// leafwise flatness of the partial connection, the derivative identity for
// omega, and the curvature of the metric-unitarized connection
CheckReport flatness_and_omega_identities(const LieFrameModel& m);

// mixed-block difference tensor S = nabla - nabla^F - nabla^Fperp: exact
// reconstruction, block exchange, skew-adjointness
CheckReport s_tensor_check(const LieFrameModel& m);

// every exact frame-model suite in one report (used by the CLI)
CheckReport verify_frame_suite(const LieFrameModel& m);

// --- evaluation at a fixed rational scale (for operator-level tests) -----

struct FrameEval {
  int n = 0, p = 0;
  Rational t;
  Tensor3<Rational> gammaE;  // rescaled-frame connection at t
  Tensor3<Rational> cE;      // rescaled-frame bracket coefficients at t
  Rational k_scalar;         // scalar curvature of the rescaled metric at t
  // complement-block curvature in the rescaled frame:
  // rperp[a][b] is the q x q matrix <R^{perp,eps}(E_a,E_b) E_{p+s}, E_{p+t}>
  std::vector<RatMat> rperp;  // indexed a*n+b
  const RatMat& rperp_at(int a, int b) const { return rperp[static_cast<size_t>(a) * n + b]; }
};

FrameEval evaluate_frame_geometry(const LieFrameModel& m, const Rational& t);

}  // namespace folia
