#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "folia/almost.hpp"
#include "folia/frame_model.hpp"
#include "folia/grid_cache.hpp"

using namespace folia;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

const std::vector<Rational> kGammas = {Rational(1), Rational(1, 4), Rational(1, 16)};

SplitFrameModel deforming_split_good() {
  return SplitFrameModel::make(LieFrameModel::kodaira_thurston(false), {3}, {2});
}

SplitFrameModel deforming_split_bad() {
  return SplitFrameModel::make(LieFrameModel::kodaira_thurston(false), {2}, {3});
}

RatMat path_matrix(int q) {
  RatMat w(q, q);
  for (int i = 0; i + 1 < q; ++i) {
    w(i, i + 1) = 1;
    w(i + 1, i) = 1;
  }
  return w;
}

// sup over the N-point grid of the conformal-warp omega entry
double conformal_norm(double sigma, int N) {
  double best = 0;
  for (int j = 0; j < N; ++j) {
    double x = static_cast<double>(j) / N;
    best = std::max(best, std::abs(two_pi * sigma * std::cos(two_pi * x) /
                                   (1.0 + sigma * std::sin(two_pi * x))));
  }
  return best;
}

}  // namespace

TEST_CASE("split construction validates the partition") {
  auto m = LieFrameModel::abelian(4, 2);
  CHECK_THROWS_AS((void)SplitFrameModel::make(m, {}, {2, 3}), std::invalid_argument);
  CHECK_THROWS_AS((void)SplitFrameModel::make(m, {2}, {2}), std::invalid_argument);
  CHECK_THROWS_AS((void)SplitFrameModel::make(m, {1}, {3}), std::invalid_argument);
  CHECK_THROWS_AS((void)SplitFrameModel::make(m, {2}, {2, 3}), std::invalid_argument);
  auto s = SplitFrameModel::make(m, {3}, {2});
  CHECK(s.q1() == 1);
  CHECK(s.q2() == 1);
}

TEST_CASE("abelian model: any split is almost isometric with zero omega") {
  auto s = SplitFrameModel::make(LieFrameModel::abelian(5, 2), {4, 2}, {3});
  CHECK(almost_isometric_check(s).all_pass());
  Tensor3<Rational> w = split_omega(s);
  Tensor3<Rational> wm = omega_tensor(s.model);
  for (int x = 0; x < 2; ++x)
    for (int u = 2; u < 5; ++u)
      for (int v = 2; v < 5; ++v) {
        CHECK(w(x, u, v) == 0);
        CHECK(wm(x, u, v) == 0);
      }
  auto law = gamma_rescale_scaling_law(s, kGammas);
  CHECK(law.base_norm == 0.0);
  CHECK(law.passed);
  CHECK(!law.slope_defined);
  auto ar = almost_riemannian_check(construct_ar_structure(s));
  CHECK(ar.trivially_riemannian);
  CHECK(ar.passed);
}

TEST_CASE("transversely rigid nilpotent model passes with zero omega") {
  auto s = SplitFrameModel::make(LieFrameModel::kodaira_thurston(true), {2}, {3});
  CHECK(almost_isometric_check(s).all_pass());
  CHECK(omega_frame_norm(s.model) == 0.0);
  CHECK(split_omega_check(s, 25).all_pass());
  auto ar = almost_riemannian_check(construct_ar_structure(s));
  CHECK(ar.trivially_riemannian);
  CHECK(ar.passed);
}

TEST_CASE("deforming nilpotent model: one split passes, the swap fails") {
  auto good = deforming_split_good();
  CHECK(almost_isometric_check(good).all_pass());
  Tensor3<Rational> w = split_omega(good);
  CHECK(w(0, 3, 2) == -1);
  CHECK(w(0, 2, 3) == -1);
  CHECK(w(1, 2, 3) == 0);
  CHECK(omega_frame_norm(good.model) == doctest::Approx(1.0).epsilon(1e-14));

  auto bad = deforming_split_bad();
  auto rep = almost_isometric_check(bad);
  CHECK(!rep.all_pass());
  bool tri_failed = false;
  for (const auto& row : rep.rows)
    if (row.law == "block_triangularity" && !row.pass) {
      tri_failed = true;
      CHECK(row.subject == "(0,2,3)");
    }
  CHECK(tri_failed);
  CHECK_THROWS_AS((void)split_omega(bad), std::invalid_argument);
  CHECK_THROWS_AS((void)gamma_rescale_scaling_law(bad, kGammas), std::invalid_argument);
  CHECK_THROWS_AS((void)construct_ar_structure(bad), std::invalid_argument);
}

TEST_CASE("split omega reproduces the metric-derivative omega exactly") {
  CHECK(split_omega_check(deforming_split_good(), 100).all_pass());
}

TEST_CASE("broken block conditions are reported by name") {
  // a single leaf direction stretching the first block: [e0, e1] = e1
  Tensor3<Rational> c(3);
  c(0, 1, 1) = 1;
  c(1, 0, 1) = -1;
  auto s = SplitFrameModel::make(LieFrameModel::make(3, 1, std::move(c), "stretch"), {1},
                                 {2});
  auto rep = almost_isometric_check(s);
  CHECK(!rep.all_pass());
  bool metric_failed = false;
  for (const auto& row : rep.rows)
    if (row.law == "block_metric_invariance" && !row.pass) metric_failed = true;
  CHECK(metric_failed);
}

TEST_CASE("sqrt gamma rescaling is exact on square parameters") {
  auto s = deforming_split_good();
  auto law = gamma_rescale_scaling_law(
      s, {Rational(1), Rational(1, 4), Rational(1, 16), Rational(1, 3)});
  CHECK(law.base_norm == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(law.passed);
  CHECK(law.all_square_exact);
  REQUIRE(law.rows.size() == 4);
  CHECK(law.rows[0].exact);
  CHECK(law.rows[1].exact);
  CHECK(law.rows[2].exact);
  CHECK(law.rows[1].omega_norm == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(law.rows[2].omega_norm == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(!law.rows[3].exact);  // 1/3 has no rational square root
  CHECK(law.rows[3].matrix_residual < 1e-12);
  CHECK(law.rows[3].omega_norm ==
        doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-13));
  CHECK(law.slope_defined);
  CHECK(std::abs(law.fitted_slope - 0.5) < 1e-10);
  CHECK_THROWS_AS((void)gamma_rescale_scaling_law(s, {Rational(-1)}),
                  std::invalid_argument);
}

TEST_CASE("rescaled model stays a valid frame model") {
  auto s = deforming_split_good();
  auto mg = gamma_rescaled_model(s, Rational(1, 2));
  mg.model.validate();
  CHECK(mg.model.c(0, 2, 3) == Rational(1, 2));  // bracket of a shrunk input shrinks
  CHECK(almost_isometric_check(mg).all_pass());
  CHECK_THROWS_AS((void)gamma_rescaled_model(s, Rational(0)), std::invalid_argument);
}

TEST_CASE("fifty randomized models obey the scaling law exactly") {
  std::mt19937_64 rng(20260815);
  const int shapes[][3] = {{1, 1, 1}, {1, 1, 2}, {1, 2, 1}, {2, 1, 1}, {2, 2, 2},
                           {2, 1, 3}, {3, 3, 1}, {1, 2, 2}, {2, 2, 1}, {3, 1, 1}};
  for (int i = 0; i < 50; ++i) {
    const auto& sh = shapes[i % 10];
    SplitFrameModel s = random_almost_isometric_model(rng, sh[0], sh[1], sh[2]);
    REQUIRE(almost_isometric_check(s).all_pass());
    REQUIRE(split_omega_check(s, 10, 100 + static_cast<unsigned>(i)).all_pass());
    auto law = gamma_rescale_scaling_law(s, kGammas);
    REQUIRE(law.passed);
    CHECK(law.all_square_exact);
    CHECK(law.max_matrix_residual == 0.0);
    REQUIRE(law.base_norm > 1e-12);  // the coupling block is forced nonzero
    CHECK(law.slope_defined);
    CHECK(std::abs(law.fitted_slope - 0.5) < 1e-10);
    auto ar = almost_riemannian_check(construct_ar_structure(s), law.base_norm / 10);
    CHECK(ar.passed);
    CHECK(ar.decreasing);
    CHECK(std::abs(ar.fitted_exponent - 0.5) < 1e-10);
  }
}

TEST_CASE("operator norm extraction matches known spectra") {
  {
    RatMat w(1, 1);
    w(0, 0) = -3;
    CHECK(symmetric_opnorm(w) == doctest::Approx(3.0).epsilon(1e-15));
  }
  {
    RatMat w(2, 2);
    w(0, 0) = 2;
    w(1, 1) = 2;
    w(0, 1) = 1;
    w(1, 0) = 1;
    CHECK(symmetric_opnorm(w) == doctest::Approx(3.0).epsilon(1e-14));
  }
  CHECK(symmetric_opnorm(path_matrix(3)) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(symmetric_opnorm(path_matrix(4)) ==
        doctest::Approx((1.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-14));
  // 5x5 takes the certified numeric branch
  CHECK(symmetric_opnorm(path_matrix(5)) ==
        doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
  RatMat bad(2, 2);
  bad(0, 1) = 1;
  CHECK_THROWS_AS((void)symmetric_opnorm(bad), std::invalid_argument);
  RatMat rect(2, 3);
  CHECK_THROWS_AS((void)symmetric_opnorm(rect), std::invalid_argument);
}

TEST_CASE("gamma family certifies the almost-Riemannian structure") {
  auto fam = construct_ar_structure(deforming_split_good());
  auto ar = almost_riemannian_check(fam, 0.2);
  CHECK(ar.passed);
  CHECK(ar.decreasing);
  CHECK(!ar.trivially_riemannian);
  REQUIRE(ar.rows.size() == 5);
  CHECK(ar.rows[0].omega_norm == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(ar.rows[2].omega_norm == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(ar.rows[4].omega_norm == doctest::Approx(0.0625).epsilon(1e-13));
  CHECK(std::abs(ar.fitted_exponent - 0.5) < 1e-10);
  // a non-square gamma cannot stay in exact arithmetic
  CHECK_THROWS_AS((void)fam.lie_map(0.3), std::domain_error);
}

TEST_CASE("conformal grid family decays linearly with closed-form values") {
  MetricFamily fam;
  fam.name = "conformal_transverse_warp";
  fam.schedule = {0.4, 0.2, 0.1, 0.05};
  fam.grid_resolution = 8;
  fam.grid_map = [](double sigma) { return CoordFoliatedTorus::sin_warped(2, 2, sigma); };
  auto ar = almost_riemannian_check(fam, 0.5);
  CHECK(ar.passed);
  CHECK(ar.decreasing);
  REQUIRE(ar.rows.size() == 4);
  for (const auto& row : ar.rows)
    CHECK(row.omega_norm == doctest::Approx(conformal_norm(row.sigma, 8)).epsilon(1e-12));
  CHECK(std::abs(ar.fitted_exponent - 1.0) < 1e-10);  // linear decay in sigma
}

TEST_CASE("frozen family fails with a flat decay fit") {
  MetricFamily fam;
  fam.name = "frozen_warp";
  fam.schedule = {0.4, 0.2, 0.1};
  fam.grid_resolution = 8;
  fam.grid_map = [](double) { return CoordFoliatedTorus::sin_warped(2, 2, 0.5); };
  auto ar = almost_riemannian_check(fam, 0.5);
  CHECK(!ar.passed);
  CHECK(!ar.decreasing);
  CHECK(std::abs(ar.fitted_exponent) < 1e-12);
}

TEST_CASE("families that vary the leaf metric are rejected") {
  MetricFamily fam;
  fam.name = "leaf_warp";
  fam.schedule = {0.4, 0.2};
  fam.grid_resolution = 8;
  fam.grid_map = [](double sigma) {
    auto m = CoordFoliatedTorus::sin_warped(2, 2, sigma);
    m.gf_at(0, 0) = m.gp_at(0, 0);  // move the warp into the leaf block
    return m;
  };
  CHECK_THROWS_AS((void)almost_riemannian_check(fam, 0.5), std::invalid_argument);
}

TEST_CASE("metric family schedules are validated") {
  MetricFamily fam;
  fam.name = "bad";
  fam.lie_map = [](double) { return LieFrameModel::abelian(3, 1); };
  CHECK_THROWS_AS((void)almost_riemannian_check(fam), std::invalid_argument);
  fam.schedule = {0.1, 0.1};
  CHECK_THROWS_AS((void)almost_riemannian_check(fam), std::invalid_argument);
  fam.schedule = {0.2, -0.1};
  CHECK_THROWS_AS((void)almost_riemannian_check(fam), std::invalid_argument);
  fam.schedule = {0.2, 0.1};
  fam.grid_map = [](double) { return CoordFoliatedTorus::flat(2, 2); };
  CHECK_THROWS_AS((void)almost_riemannian_check(fam), std::invalid_argument);  // two maps
  fam.lie_map = nullptr;
  fam.grid_map = nullptr;
  CHECK_THROWS_AS((void)almost_riemannian_check(fam), std::invalid_argument);  // no maps
}

TEST_CASE("suite report covers all split laws") {
  auto rep = verify_almost_suite(deforming_split_good(), kGammas);
  CHECK(rep.all_pass());
  bool saw_scaling = false, saw_family = false;
  for (const auto& row : rep.rows) {
    if (row.law == "sqrt_gamma_scaling") saw_scaling = true;
    if (row.law == "ar_family_certified") saw_family = true;
  }
  CHECK(saw_scaling);
  CHECK(saw_family);

  auto bad = verify_almost_suite(deforming_split_bad(), kGammas);
  CHECK(!bad.all_pass());
  bool skipped = false;
  for (const auto& row : bad.rows)
    if (row.law == "sqrt_gamma_scaling" && row.subject == "skipped") skipped = true;
  CHECK(skipped);
}
