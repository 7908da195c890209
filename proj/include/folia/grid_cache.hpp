#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "folia/report.hpp"
#include "folia/trig_poly.hpp"

// Numerical geometry of coordinate-foliated tori. The leaf distribution is
// span{d/dx_0 .. d/dx_{p-1}}, the metric is block diagonal GF (+) GP, and the
// adiabatically rescaled metric is GF (+) (1/epsilon) GP. Metric entries are
// trigonometric polynomials, so their derivatives at grid points are exact;
// square roots and inverses are computed pointwise.

namespace folia {

struct CoordFoliatedTorus {
  int p = 0, q = 0;
  double epsilon = 1.0;
  std::string name;
  std::vector<TrigPolyField> gf;  // p*p row-major symmetric block
  std::vector<TrigPolyField> gp;  // q*q row-major symmetric block

  int n() const { return p + q; }
  TrigPolyField& gf_at(int i, int j) { return gf[i * p + j]; }
  const TrigPolyField& gf_at(int i, int j) const { return gf[i * p + j]; }
  TrigPolyField& gp_at(int s, int t) { return gp[s * q + t]; }
  const TrigPolyField& gp_at(int s, int t) const { return gp[s * q + t]; }
  int metric_bandwidth() const;
  CoordFoliatedTorus with_epsilon(double eps) const;

  static CoordFoliatedTorus flat(int p, int q);
  // GF = I, GP = (1 + sigma sin 2 pi x_0) I
  static CoordFoliatedTorus sin_warped(int p, int q, double sigma);
};

// smallest admissible grid: N >= 4*bandwidth + 1 and N >= 4
int min_grid_size(const CoordFoliatedTorus& m);

// Pointwise geometry of the epsilon-rescaled metric in its orthonormal
// frame {f_i} (leaf block) and {h_s} (transverse block). Fields are stored
// per grid point, row-major grid order with the last axis fastest.
struct GridGeometryCache {
  int p = 0, q = 0, N = 0;
  double epsilon = 1.0;
  std::size_t npoints = 0;

  std::vector<double> frame_f;   // p*p: frame_f[mu*p+i] = coeff of d/dx_mu in f_i
  std::vector<double> frame_p;   // q*q: coeff of d/dx_{p+kappa} in h_s
  std::vector<double> dframe_f;  // n*p*p: d/dx_nu of frame_f entries
  std::vector<double> dframe_p;  // n*q*q
  std::vector<double> conn;      // n*n*n: conn[mu][b][c] = <nabla_{dx_mu} E_b, E_c>
  std::vector<double> omega;     // p*q*q: omega(dx_i) in the transverse frame
  std::vector<double> scal;      // scalar curvature of the rescaled metric
  std::vector<double> scal_leaf; // leafwise scalar curvature of GF
  std::vector<double> curv_f;    // pairs(n)*p*p: <R^F(dx_mu,dx_nu) f_i, f_j>
  std::vector<double> curv_p;    // pairs(n)*q*q: <R^{Fperp}(dx_mu,dx_nu) h_s, h_t>
  std::vector<double> sqrt_det;  // volume density of the rescaled metric

  int n() const { return p + q; }
  int npairs() const { return n() * (n() - 1) / 2; }
  static int pair_index(int mu, int nu, int n);  // requires mu < nu

  double frame_f_at(std::size_t pt, int mu, int i) const {
    return frame_f[(pt * p + mu) * p + i];
  }
  double frame_p_at(std::size_t pt, int kappa, int s) const {
    return frame_p[(pt * q + kappa) * q + s];
  }
  double dframe_f_at(std::size_t pt, int nu, int mu, int i) const {
    return dframe_f[((pt * n() + nu) * p + mu) * p + i];
  }
  double dframe_p_at(std::size_t pt, int nu, int kappa, int s) const {
    return dframe_p[((pt * n() + nu) * q + kappa) * q + s];
  }
  double conn_at(std::size_t pt, int mu, int b, int c) const {
    return conn[((pt * n() + mu) * n() + b) * n() + c];
  }
  double omega_at(std::size_t pt, int i, int s, int t) const {
    return omega[((pt * p + i) * q + s) * q + t];
  }
  // signed lookup of the bundle curvature forms (mu != nu)
  double curv_f_at(std::size_t pt, int mu, int nu, int i, int j) const;
  double curv_p_at(std::size_t pt, int mu, int nu, int s, int t) const;

  // frame-direction contractions
  double frame_component(std::size_t pt, int mu, int a) const;  // coeff of dx_mu in E_a
  double frame_conn_at(std::size_t pt, int a, int b, int c) const;
  double curv_p_frame_at(std::size_t pt, int a, int b, int s, int t) const;
  double curv_f_frame_at(std::size_t pt, int a, int b, int i, int j) const;
  // mixed-block second fundamental form <S(E_a) E_b, E_c>
  double s_tensor_at(std::size_t pt, int a, int b, int c) const;

  std::vector<double> grid_coords(std::size_t pt) const;
};

GridGeometryCache build_cache(const CoordFoliatedTorus& m, int N);

struct SampledScalarField {
  int N = 0;
  double min_value = 0;
  const std::vector<double>* values = nullptr;
};
SampledScalarField scalar_curvature_eps(const GridGeometryCache& c);
SampledScalarField leaf_scalar_curvature(const GridGeometryCache& c);

// sup over grid points of max_{|X|=1, X in F} |omega(X)|_op
double omega_sup_norm(const GridGeometryCache& c);

// consistency suite: SPD margins, frame factorization, Fourier-vs-exact
// differentiation, Koszul compatibility and torsion, omega cross-check
CheckReport verify_grid_geometry(const CoordFoliatedTorus& m, int N);

struct GapProbeRow {
  double sigma = 0, epsilon = 0;
  int N = 0;
  double min_kf = 0, min_k_eps = 0, omega_norm = 0;
};
struct GapProbeReport {
  std::vector<GapProbeRow> rows;
  double fitted_c = 0;  // max over rows of curvature deficit per unit omega
  std::vector<std::pair<double, double>> fitted_c_per_eps;
  double c_stability_ratio = 1;  // max/min of the per-epsilon fitted constants
  bool pattern_holds = false;
};
GapProbeReport gap_inequality_probe(
    const std::function<CoordFoliatedTorus(double)>& family,
    const std::vector<double>& sigmas, const std::vector<double>& eps_list,
    int N);

}  // namespace folia
