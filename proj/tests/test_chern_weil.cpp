#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "folia/chern_weil.hpp"
#include "folia/fft_grid.hpp"
#include "folia/grid_cache.hpp"

using namespace folia;

namespace {

constexpr double kPi = std::numbers::pi;

// deterministic pseudo-random doubles in [-1, 1]
struct Lcg {
  std::uint64_t s;
  explicit Lcg(std::uint64_t seed) : s(seed) {}
  double next() {
    s = s * 6364136223846793005ull + 1442695040888963407ull;
    return 2.0 * static_cast<double>(s >> 11) / 9007199254740992.0 - 1.0;
  }
};

FormField random_band1_field(int nvars, int degree, int N,
                             std::uint64_t seed) {
  FormField f = FormField::zero(nvars, degree, N);
  Lcg rng(seed);
  FftGrid grid(nvars, N);
  for (auto& comp : f.comps) {
    std::vector<double> c(nvars), s(nvars);
    double c0 = rng.next();
    for (int m = 0; m < nvars; ++m) {
      c[m] = rng.next();
      s[m] = rng.next();
    }
    for (std::size_t pt = 0; pt < f.npoints; ++pt) {
      auto x = grid.coords(pt);
      double v = c0;
      for (int m = 0; m < nvars; ++m)
        v += c[m] * std::cos(2 * kPi * x[m]) + s[m] * std::sin(2 * kPi * x[m]);
      comp[pt] = v;
    }
  }
  return f;
}

CurvatureForm random_skew_curvature(int nvars, int N, int rank,
                                    std::uint64_t seed) {
  CurvatureForm R = CurvatureForm::zero(nvars, N, rank);
  Lcg rng(seed);
  for (std::size_t pt = 0; pt < R.npoints; ++pt)
    for (int pair = 0; pair < R.npairs(); ++pair)
      for (int a = 0; a < rank; ++a)
        for (int b = a + 1; b < rank; ++b) {
          double v = rng.next();
          R.entry(pt, pair, a, b) = v;
          R.entry(pt, pair, b, a) = -v;
        }
  return R;
}

void add_rotation_pattern(CoordFoliatedTorus& m, bool transverse, int r0,
                          int r1, const std::vector<int>& sum,
                          const std::vector<int>& diff, double amp) {
  auto& e00 = transverse ? m.gp_at(r0, r0) : m.gf_at(r0, r0);
  auto& e11 = transverse ? m.gp_at(r1, r1) : m.gf_at(r1, r1);
  auto& e01 = transverse ? m.gp_at(r0, r1) : m.gf_at(r0, r1);
  auto& e10 = transverse ? m.gp_at(r1, r0) : m.gf_at(r1, r0);
  e00.add_sin(sum, amp);
  e00.add_sin(diff, amp);
  e11.add_sin(sum, -amp);
  e11.add_sin(diff, -amp);
  e01.add_cos(diff, amp);
  e01.add_cos(sum, -amp);
  e10.add_cos(diff, amp);
  e10.add_cos(sum, -amp);
}

// four rotation patterns covering complementary coordinate pairs, so the
// leaf and transverse bundle curvatures have pointwise nonzero Pontryagin
// and Euler forms while every pairing still vanishes for topology reasons
CoordFoliatedTorus rich_model(double amp) {
  CoordFoliatedTorus m = CoordFoliatedTorus::flat(2, 2);
  m.name = "rich_torus";
  add_rotation_pattern(m, true, 0, 1, {1, 1, 0, 0}, {1, -1, 0, 0}, amp);
  add_rotation_pattern(m, true, 0, 1, {0, 0, 1, 1}, {0, 0, 1, -1}, amp);
  add_rotation_pattern(m, false, 0, 1, {1, 0, 1, 0}, {1, 0, -1, 0}, amp);
  add_rotation_pattern(m, false, 0, 1, {0, 1, 0, 1}, {0, 1, 0, -1}, amp);
  return m;
}

// five dimensional model (q = 3): nonabelian transverse structure group,
// with waves reaching every coordinate so exterior derivatives are honest
CoordFoliatedTorus five_dim_model(double amp) {
  CoordFoliatedTorus m = CoordFoliatedTorus::flat(2, 3);
  m.name = "five_dim_torus";
  add_rotation_pattern(m, true, 0, 1, {1, 1, 0, 0, 0}, {1, -1, 0, 0, 0}, amp);
  add_rotation_pattern(m, true, 0, 1, {0, 0, 1, 1, 1}, {0, 0, 1, -1, -1},
                       amp);
  add_rotation_pattern(m, true, 1, 2, {1, 0, 0, 1, 0}, {1, 0, 0, -1, 0}, amp);
  add_rotation_pattern(m, false, 0, 1, {1, 1, 0, 0, 0}, {1, -1, 0, 0, 0},
                       amp);
  add_rotation_pattern(m, false, 0, 1, {0, 0, 1, 1, 1}, {0, 0, 1, -1, -1},
                       amp);
  return m;
}

}  // namespace

TEST_CASE("wedge product is graded commutative and matches by hand") {
  const int n = 4, N = 8;
  FormField a = random_band1_field(n, 1, N, 11);
  FormField b = random_band1_field(n, 1, N, 22);
  FormField ab = wedge(a, b);
  FormField ba = wedge(b, a);
  double worst = 0;
  for (std::size_t c = 0; c < ab.comps.size(); ++c)
    for (std::size_t pt = 0; pt < ab.npoints; ++pt)
      worst = std::max(worst, std::abs(ab.comps[c][pt] + ba.comps[c][pt]));
  CHECK(worst < 1e-14);

  // component of dx0^dx1 is a0 b1 - a1 b0
  int i01 = ab.combo_index({0, 1});
  REQUIRE(i01 >= 0);
  for (std::size_t pt = 0; pt < ab.npoints; pt += 97) {
    double want = a.comps[0][pt] * b.comps[1][pt] -
                  a.comps[1][pt] * b.comps[0][pt];
    CHECK(std::abs(ab.comps[i01][pt] - want) < 1e-14);
  }

  // degree-2 forms commute
  FormField c = random_band1_field(n, 2, N, 33);
  FormField d = random_band1_field(n, 2, N, 44);
  FormField cd = wedge(c, d);
  FormField dc = wedge(d, c);
  worst = 0;
  for (std::size_t k = 0; k < cd.comps.size(); ++k)
    for (std::size_t pt = 0; pt < cd.npoints; ++pt)
      worst = std::max(worst, std::abs(cd.comps[k][pt] - dc.comps[k][pt]));
  CHECK(worst < 1e-14);
}

TEST_CASE("exterior derivative squares to zero and obeys leibniz") {
  const int n = 4, N = 8;
  FormField a = random_band1_field(n, 1, N, 7);
  FormField da = exterior_derivative(a);
  CHECK(exterior_derivative(da).sup_norm() < 1e-10);

  // band-1 fields at N=8 keep their products below the Nyquist band, so
  // the spectral derivative is exact and Leibniz holds to roundoff
  FormField b = random_band1_field(n, 1, N, 8);
  FormField lhs = exterior_derivative(wedge(a, b));
  FormField rhs = wedge(da, b);
  FormField adb = wedge(a, exterior_derivative(b));
  adb *= -1.0;  // d(a^b) = da^b - a^db for 1-forms
  rhs += adb;
  rhs *= -1.0;
  lhs += rhs;
  CHECK(lhs.sup_norm() < 1e-10);
}

TEST_CASE("integration of an exact top form vanishes") {
  const int n = 4, N = 8;
  FormField a = random_band1_field(n, 3, N, 55);
  CHECK(std::abs(integrate_top(exterior_derivative(a))) < 1e-12);
  CHECK_THROWS_AS((void)integrate_top(a), std::invalid_argument);
}

TEST_CASE("trace of the squared curvature matches the generic wedge") {
  CurvatureForm R = random_skew_curvature(4, 4, 3, 99);
  FormField t2 = trace_power(R, 2);
  FormField ref = FormField::zero(4, 4, 4);
  for (int a = 0; a < R.rank; ++a)
    for (int b = 0; b < R.rank; ++b)
      ref += wedge(R.entry_form(a, b), R.entry_form(b, a));
  ref *= -1.0;
  ref += t2;
  CHECK(ref.sup_norm() < 1e-12);

  // odd traces of skew matrices vanish
  CHECK(trace_power(R, 1).sup_norm() < 1e-14);
}

TEST_CASE("pontryagin forms reject non-skew curvature") {
  CurvatureForm R = CurvatureForm::zero(4, 4, 2);
  R.entry(0, 0, 0, 1) = 1.0;  // missing the skew partner
  CHECK_THROWS_AS((void)pontryagin_forms(R), std::invalid_argument);
  CHECK_THROWS_AS((void)ch_form(R), std::invalid_argument);
}

TEST_CASE("euler form is the classical pfaffian") {
  CHECK_THROWS_AS((void)euler_form(CurvatureForm::zero(4, 4, 3)),
                  std::invalid_argument);

  CurvatureForm R = random_skew_curvature(4, 4, 4, 123);
  FormField e = euler_form(R);
  FormField ref = wedge(R.entry_form(0, 1), R.entry_form(2, 3));
  FormField t2 = wedge(R.entry_form(0, 2), R.entry_form(1, 3));
  t2 *= -1.0;
  ref += t2;
  ref += wedge(R.entry_form(0, 3), R.entry_form(1, 2));
  ref *= 1.0 / (4 * kPi * kPi);
  ref *= -1.0;
  ref += e;
  CHECK(ref.sup_norm() < 1e-12);

  // rank 2: the single off-diagonal entry over 2 pi
  CurvatureForm R2 = random_skew_curvature(4, 4, 2, 321);
  FormField e2 = euler_form(R2);
  FormField ref2 = R2.entry_form(0, 1);
  ref2 *= -1.0 / (2 * kPi);
  ref2 += e2;
  CHECK(ref2.sup_norm() < 1e-14);
}

TEST_CASE("flat model has vanishing characteristic data") {
  auto cache = build_cache(CoordFoliatedTorus::flat(2, 2), 8);
  auto rp = normal_bundle_curvature(cache);
  auto rf = leaf_bundle_curvature(cache);
  auto rtm = tangent_bundle_curvature(cache);
  CHECK(pontryagin_forms(rp)[0].sup_norm() == 0.0);
  CHECK(pontryagin_forms(rf)[0].sup_norm() == 0.0);
  CHECK(pontryagin_forms(rtm)[0].sup_norm() < 1e-14);
  CHECK(euler_form(rp).sup_norm() == 0.0);

  MixedForm ahat = a_hat_form(rf);
  const FormField* unit = ahat.part_of_degree(0);
  REQUIRE(unit != nullptr);
  CHECK(std::abs(unit->comps[0][0] - 1.0) < 1e-15);

  auto rep = vanishing_pairings(cache, PhiBundleSpec::exterior(1), "flat");
  CHECK(rep.euler_defined);
  CHECK(rep.max_abs_pairing() < 1e-14);
}

TEST_CASE("conformal transverse warp keeps the normal connection flat") {
  auto cache = build_cache(CoordFoliatedTorus::sin_warped(2, 2, 0.5), 16);
  auto rp = normal_bundle_curvature(cache);
  // the orthonormal transverse frame absorbs the conformal factor without
  // rotating, so the bundle curvature vanishes identically
  CHECK(rp.vals.empty() == false);
  double sup = 0;
  for (double v : rp.vals) sup = std::max(sup, std::abs(v));
  CHECK(sup < 1e-12);

  auto rep = vanishing_pairings(cache, PhiBundleSpec::exterior(1), "warp");
  CHECK(rep.max_abs_pairing() < 1e-12);
}

TEST_CASE("curved model: pointwise nonzero forms, vanishing pairings") {
  auto cache = build_cache(rich_model(0.0625), 16);
  auto rp = normal_bundle_curvature(cache);
  auto rf = leaf_bundle_curvature(cache);

  auto p1p = pontryagin_forms(rp)[0];
  auto p1f = pontryagin_forms(rf)[0];
  auto e = euler_form(rp);
  CHECK(p1p.sup_norm() > 1e-3);
  CHECK(p1f.sup_norm() > 1e-2);
  CHECK(e.sup_norm() > 0.1);

  auto rep = vanishing_pairings(cache, PhiBundleSpec::exterior(1), "rich");
  CHECK(rep.euler_defined);
  CHECK(rep.max_abs_pairing() < 1e-12);
}

TEST_CASE("characteristic integrands are closed on the curved model") {
  auto cache = build_cache(rich_model(0.0625), 16);
  for (const auto& [name, res] :
       integrand_closure_residuals(cache, PhiBundleSpec::exterior(1))) {
    INFO(name);
    CHECK(res <= 1e-6);
  }
}

TEST_CASE("pairings are stable under grid doubling and metric deformation") {
  auto phi = PhiBundleSpec::exterior(1);
  auto r1 = vanishing_pairings(build_cache(rich_model(0.0625), 12), phi, "m");
  auto r2 = vanishing_pairings(build_cache(rich_model(0.0625), 24), phi, "m");
  CHECK(std::abs(r2.ahat_l_ch - r1.ahat_l_ch) < 1e-10);
  CHECK(std::abs(r2.ahat_p1_perp - r1.ahat_p1_perp) < 1e-10);
  CHECK(std::abs(r2.ahat_euler - r1.ahat_euler) < 1e-10);
  CHECK(std::abs(r2.ahat_tm - r1.ahat_tm) < 1e-10);

  // a different metric on the same underlying bundles gives the same
  // (identically zero) characteristic numbers
  auto r3 = vanishing_pairings(build_cache(rich_model(0.1), 12), phi, "m2");
  CHECK(std::abs(r3.ahat_p1_perp - r1.ahat_p1_perp) < 1e-8);
  CHECK(std::abs(r3.ahat_l_ch - r1.ahat_l_ch) < 1e-8);
}

TEST_CASE("chern character doubles on a direct sum") {
  auto cache = build_cache(rich_model(0.0625), 12);
  auto single = vanishing_pairings(cache, PhiBundleSpec::exterior(1), "m");
  auto doubled = vanishing_pairings(cache, PhiBundleSpec::exterior(1, 2), "m");
  CHECK(std::abs(doubled.ahat_l_ch - 2.0 * single.ahat_l_ch) < 1e-14);

  auto chp1 = ch_form(phi_bundle_curvature(cache, PhiBundleSpec::exterior(1)));
  auto chp2 =
      ch_form(phi_bundle_curvature(cache, PhiBundleSpec::exterior(1, 2)));
  const FormField* r1 = chp1.part_of_degree(0);
  const FormField* r2 = chp2.part_of_degree(0);
  REQUIRE(r1 != nullptr);
  REQUIRE(r2 != nullptr);
  CHECK(r2->comps[0][0] == 2.0 * r1->comps[0][0]);
}

TEST_CASE("rank-one exterior functor reproduces the base curvature") {
  auto cache = build_cache(rich_model(0.0625), 12);
  auto rp = normal_bundle_curvature(cache);
  auto rphi = phi_bundle_curvature(cache, PhiBundleSpec::exterior(1));
  REQUIRE(rphi.rank == rp.rank);
  double worst = 0;
  for (std::size_t i = 0; i < rp.vals.size(); ++i)
    worst = std::max(worst, std::abs(rp.vals[i] - rphi.vals[i]));
  CHECK(worst < 1e-13);

  // hence ch degree-4 equals the first Pontryagin form of the base bundle
  auto chp = ch_form(rphi);
  const FormField* ch4 = chp.part_of_degree(4);
  REQUIRE(ch4 != nullptr);
  FormField diff = pontryagin_forms(rp)[0];
  diff *= -1.0;
  diff += *ch4;
  CHECK(diff.sup_norm() < 1e-13);
}

TEST_CASE("five dimensional model: nonabelian closure below tolerance") {
  auto cache = build_cache(five_dim_model(0.015), 12);
  auto rp = normal_bundle_curvature(cache);
  auto p1p = pontryagin_forms(rp)[0];
  CHECK(p1p.sup_norm() > 1e-2);  // honest signal, not a zero field
  CHECK(closure_residual(p1p) <= 1e-6);

  auto rtm = tangent_bundle_curvature(cache);
  auto p1tm = pontryagin_forms(rtm)[0];
  CHECK(p1tm.sup_norm() > 1e-2);
  CHECK(closure_residual(p1tm) <= 1e-6);

  auto rep = vanishing_pairings(cache, PhiBundleSpec::exterior(1), "fd");
  CHECK_FALSE(rep.euler_defined);  // odd transverse rank has no Pfaffian
  CHECK(rep.max_abs_pairing() == 0.0);  // no degree-5 characteristic form
}
