#pragma once

#include <string>
#include <utility>
#include <vector>

#include "folia/clifford.hpp"
#include "folia/grid_cache.hpp"

// Characteristic forms from pointwise curvature. Differential forms are
// sampled over the coordinate coframe on the N^n grid; curvature 2-forms of
// the leaf, transverse, functor and full tangent bundles feed the classical
// genus forms (Pontryagin, A-hat, L, Chern character, Euler/Pfaffian), whose
// top components are integrated by the trapezoid rule (exact for
// trigonometric polynomials below the Nyquist band).

namespace folia {

// homogeneous degree-k form: one scalar field per strictly increasing index
// tuple, tuples enumerated in lexicographic order
struct FormField {
  int nvars = 0, degree = 0, grid_size = 0;
  std::size_t npoints = 0;
  std::vector<std::vector<int>> combos;
  std::vector<std::vector<double>> comps;  // combos.size() x npoints

  static FormField zero(int nvars, int degree, int grid_size);
  static FormField constant(int nvars, int grid_size, double value);

  int combo_index(const std::vector<int>& idx) const;  // lexicographic rank
  double sup_norm() const;
  bool empty() const { return comps.empty(); }
  FormField& operator+=(const FormField& other);
  FormField& operator*=(double s);
};

FormField wedge(const FormField& a, const FormField& b);
// spectral exterior derivative; exact on fields below the Nyquist band
FormField exterior_derivative(const FormField& a);
double integrate_top(const FormField& a);  // requires degree == nvars
// sup norm of the spectral exterior derivative (0 for top degree)
double closure_residual(const FormField& a);

// inhomogeneous form: sum of homogeneous parts of distinct degrees
struct MixedForm {
  int nvars = 0, grid_size = 0;
  std::vector<FormField> parts;

  const FormField* part_of_degree(int k) const;
  MixedForm& add(FormField f);  // merges with an existing part of same degree
  MixedForm& operator*=(double s);
};

MixedForm mixed_wedge(const MixedForm& a, const MixedForm& b);
double integrate_top(const MixedForm& a);
double closure_residual(const MixedForm& a);

// curvature of a metric connection in an orthonormal bundle frame: for each
// coordinate pair mu < nu and grid point, the skew matrix
// entry(pt, pair, a, b) = <R(d/dx_mu, d/dx_nu) e_a, e_b>
struct CurvatureForm {
  int nvars = 0, grid_size = 0, rank = 0;
  std::size_t npoints = 0;
  std::vector<double> vals;  // [((pt * npairs + pair) * rank + a) * rank + b]

  int npairs() const { return nvars * (nvars - 1) / 2; }
  double entry(std::size_t pt, int pair, int a, int b) const {
    return vals[((pt * npairs() + pair) * rank + a) * rank + b];
  }
  double& entry(std::size_t pt, int pair, int a, int b) {
    return vals[((pt * npairs() + pair) * rank + a) * rank + b];
  }
  static CurvatureForm zero(int nvars, int grid_size, int rank);
  // the (a,b) entry across all pairs and points as a 2-form field
  FormField entry_form(int a, int b) const;
  double max_skew_defect() const;  // sup |entry(a,b) + entry(b,a)|
};

CurvatureForm leaf_bundle_curvature(const GridGeometryCache& cache);
CurvatureForm normal_bundle_curvature(const GridGeometryCache& cache);
// functorial (derivation) lift of the transverse curvature to a phi bundle
CurvatureForm phi_bundle_curvature(const GridGeometryCache& cache,
                                   const PhiBundleSpec& phi);
// curvature of the full tangent bundle in the orthonormal frame, assembled
// from the cached connection with spectral derivatives
CurvatureForm tangent_bundle_curvature(const GridGeometryCache& cache);

// trace of the k-fold wedge power, a 2k-form (identically 0 for odd k)
FormField trace_power(const CurvatureForm& R, int k);

// p_i via traces of wedge powers of R/(2 pi); throws on non-skew input
// (tolerance 1e-9); entries beyond the top degree come back empty
std::vector<FormField> pontryagin_forms(const CurvatureForm& R);

// Hirzebruch series in the Pontryagin forms, hard coded through degree 8
MixedForm a_hat_form(const CurvatureForm& R);
MixedForm l_form(const CurvatureForm& R);
// Chern character of the complexification: rank + traces of even powers
MixedForm ch_form(const CurvatureForm& R);
// Pfaffian of R/(2 pi); throws for odd rank
FormField euler_form(const CurvatureForm& R);

struct CharClassReport {
  std::string model;
  int N = 0;
  double epsilon = 1.0;
  double ahat_l_ch = 0;    // <A-hat(F) L(Fperp) ch(phi), [M]>
  double ahat_p1_perp = 0; // <A-hat(F) p1(Fperp), [M]>
  double ahat_only = 0;    // <A-hat(F), [M]>  (Pontryagin monomial 1)
  double ahat_euler = 0;   // <A-hat(F) e(Fperp), [M]>
  double ahat_tm = 0;      // <A-hat(TM), [M]>
  bool euler_defined = false;  // q even
  double max_abs_pairing() const;
};

// evaluates the vanishing pairings on one grid model; every bundle involved
// is trivial on the torus, so each value is a numerical zero
CharClassReport vanishing_pairings(const GridGeometryCache& cache,
                                   const PhiBundleSpec& phi,
                                   const std::string& model_name = "");

// sup norms of the spectral exterior derivative of each named integrand
std::vector<std::pair<std::string, double>> integrand_closure_residuals(
    const GridGeometryCache& cache, const PhiBundleSpec& phi);

}  // namespace folia
