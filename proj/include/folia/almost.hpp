#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "folia/frame_model.hpp"
#include "folia/grid_cache.hpp"
#include "folia/report.hpp"

// Almost-isometric transverse splits and the metric families they generate.
// A split model refines F_perp into two blocks F1 (+) F2.  The split is
// almost isometric when leafwise transport preserves the block metrics and
// is block triangular (never maps F1 into F2).  On such models the leafwise
// metric derivative omega collapses to the bracket pairing of the blocks,
// and shrinking the F2 metric by a factor gamma scales ||omega|| by exactly
// sqrt(gamma) -- so gamma -> 0 yields a family of metrics whose omega decays
// to zero with fixed leaf metric: an almost-Riemannian structure.

namespace folia {

// partition of the transverse frame indices p..n-1 into two nonempty blocks
struct SplitFrameModel {
  LieFrameModel model;
  std::vector<int> first;   // absolute frame indices spanning F1
  std::vector<int> second;  // absolute frame indices spanning F2

  int q1() const { return static_cast<int>(first.size()); }
  int q2() const { return static_cast<int>(second.size()); }

  // validated constructor: first/second must partition {p..n-1}
  static SplitFrameModel make(LieFrameModel m, std::vector<int> first,
                              std::vector<int> second);
};

// exact verification of the split bracket conditions: within each block the
// leafwise derivative of the metric vanishes, across the blocks transport is
// triangular; plus the equivalent covariant-derivative forms
CheckReport almost_isometric_check(const SplitFrameModel& m);

// omega computed purely from the cross-block brackets; throws
// std::invalid_argument naming the violated condition when the split is not
// almost isometric
Tensor3<Rational> split_omega(const SplitFrameModel& m);

// cross-check of split_omega against the metric-derivative omega: entrywise
// and as quadratic forms on randomized (dyadic, hence exact) frame vectors
CheckReport split_omega_check(const SplitFrameModel& m, int vector_trials = 100,
                              unsigned seed = 2026);

// the same geometry with g replaced by g^F (+) g^{F1} (+) (1/gamma) g^{F2},
// presented in its orthonormal frame; rho = sqrt(gamma) must be rational so
// every downstream quantity stays exact
SplitFrameModel gamma_rescaled_model(const SplitFrameModel& m, const Rational& rho);

// largest |eigenvalue| of a symmetric matrix with exact entries: roots of the
// exact characteristic polynomial (Newton-polished) up to 4x4, certified
// numeric eigensolve beyond
double symmetric_opnorm(const RatMat& w);

// max over leaf frame directions e_0..e_{p-1} of the operator norm of the
// transverse block of omega
double omega_frame_norm(const LieFrameModel& m);

struct GammaLawRow {
  Rational gamma;
  double omega_norm = 0;       // ||omega_gamma|| in the gamma metric
  double predicted = 0;        // sqrt(gamma) * base norm
  bool exact = false;          // entrywise rational identity (square gamma)
  double matrix_residual = 0;  // sup-entry defect of the sqrt-gamma law
};

struct GammaLawReport {
  std::string model;
  double base_norm = 0;
  std::vector<GammaLawRow> rows;
  double fitted_slope = 0;     // log ||omega_gamma|| against log gamma
  bool slope_defined = false;  // needs omega != 0 and two distinct gammas
  double max_matrix_residual = 0;
  bool all_square_exact = true;
  bool passed = false;
};

// the sqrt(gamma) rescaling law on a verified split: gammas with a rational
// square root are checked as exact identities, the rest numerically to 1e-12;
// throws std::invalid_argument when the split fails the bracket conditions
GammaLawReport gamma_rescale_scaling_law(const SplitFrameModel& m,
                                         const std::vector<Rational>& gammas);

// one-parameter metric family sigma -> g_sigma with fixed leaf metric;
// exactly one of the two maps is set
struct MetricFamily {
  std::string name;
  std::vector<double> schedule;  // positive, strictly decreasing
  std::function<LieFrameModel(double)> lie_map;
  std::function<CoordFoliatedTorus(double)> grid_map;
  int grid_resolution = 16;
};

struct ArRow {
  double sigma = 0;
  double omega_norm = 0;
};

struct ArReport {
  std::string family;
  std::vector<ArRow> rows;
  double fitted_exponent = 0;  // log-log decay rate over the nonzero rows
  double threshold = 0;
  bool trivially_riemannian = false;  // omega vanishes along the whole family
  bool decreasing = false;
  bool below_threshold = false;
  bool passed = false;
};

// evaluates ||omega_sigma|| in the sigma metric along the schedule and checks
// strict decay below the threshold; throws std::invalid_argument on malformed
// schedules or when the family varies the leaf metric
ArReport almost_riemannian_check(const MetricFamily& fam, double threshold = 0.1);

// the family gamma -> g_gamma realizing an almost-Riemannian structure on an
// almost-isometric split; throws when the split fails the bracket conditions
MetricFamily construct_ar_structure(const SplitFrameModel& m);

// random almost-isometric model: abelian leaf block acting on the transverse
// space by commuting block-triangular derivations with skew diagonal blocks;
// dyadic coefficients keep downstream double arithmetic exact
SplitFrameModel random_almost_isometric_model(std::mt19937_64& rng, int p,
                                              int q1, int q2);

// every split-model check in one report (used by the CLI): bracket
// conditions, omega reduction, scaling law, and family certification
CheckReport verify_almost_suite(const SplitFrameModel& m,
                                const std::vector<Rational>& gammas);

}  // namespace folia
