#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "folia/grid_cache.hpp"

// Finite-dimensional Clifford data: a spinor module for the leaf block with
// skew-adjoint generators (cc + cc = -2<,>), the exterior-algebra module for
// the transverse block carrying both actions c = wedge - contraction and
// chat = wedge + contraction, the tau involution, graded tensor products,
// and derivation lifts of transverse endomorphisms to functor bundles.

namespace folia {

using CMat = Eigen::MatrixXcd;

struct SpinRep {
  int p = 0;
  std::vector<CMat> gamma;  // c(f_i), dimension 2^{p/2}
  CMat grading;             // chirality: squares to I, anticommutes with gammas
  int dim() const { return gamma.empty() ? 1 : (int)gamma[0].rows(); }
};
SpinRep build_spin_rep(int p);  // p even, p <= 8

struct ExtRep {
  int q = 0;
  std::vector<CMat> c;     // wedge - contraction: cc + cc = -2<,>
  std::vector<CMat> chat;  // wedge + contraction: cc + cc = +2<,>
  CMat tau;                // grading: commutes with chat, anticommutes with c
  int dim() const { return 1 << q; }
};
ExtRep build_ext_rep(int q);  // q even, q <= 6

struct PhiTerm {
  bool symmetric = false;  // false: exterior power, true: symmetric power
  int k = 0;
  int multiplicity = 1;
};
struct PhiBundleSpec {
  std::vector<PhiTerm> terms;
  static PhiBundleSpec trivial();  // single Lambda^0 summand
  static PhiBundleSpec exterior(int k, int multiplicity = 1);
  static PhiBundleSpec symmetric(int k, int multiplicity = 1);
  int rank(int q) const;
  bool is_trivial() const;
};

// derivation lift of a transverse frame endomorphism given as its standard
// matrix, a(t,s) = <A h_s, h_t>; additive over summands, Leibniz over products
CMat phi_derivation_lift(const PhiBundleSpec& phi, int q, const CMat& a);

struct GradedFiber {
  SpinRep sr;
  ExtRep er;
  PhiBundleSpec phi;
  int p = 0, q = 0;
  int phi_rank = 1;
  int dim = 0;              // 2^{p/2} * 2^q * phi_rank
  std::vector<CMat> cf;     // lifted c(f_i)
  std::vector<CMat> ch;     // lifted c(h_s), grading-twisted on the S factor
  std::vector<CMat> chat;   // lifted chat(h_s)
  CMat grading;             // total Z/2 grading
};
GradedFiber graded_tensor(const SpinRep& sr, const ExtRep& er,
                          const PhiBundleSpec& phi);

// total-fiber connection matrix in coordinate direction mu at a grid point:
// quarter-quadratic spin lift on the leaf factor, (cc - chat chat)/4 lift on
// the exterior factor, derivation lift on the functor factor
CMat connection_lift_at(const GridGeometryCache& cache, const GradedFiber& fib,
                        std::size_t pt, int mu);

// R^{phi} (dx_mu, dx_nu) acting on the total fiber through the functor factor
CMat phi_curvature_lift_at(const GridGeometryCache& cache,
                           const GradedFiber& fib, std::size_t pt, int mu,
                           int nu);

CMat kron(const CMat& a, const CMat& b);

}  // namespace folia
