#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <vector>

#include "folia/clifford.hpp"
#include "folia/grid_cache.hpp"

using namespace folia;

namespace {

double max_abs(const CMat& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

CMat acomm(const CMat& a, const CMat& b) { return a * b + b * a; }
CMat comm(const CMat& a, const CMat& b) { return a * b - b * a; }

// every entry lies in {0, 1, -1, i, -i}
bool gaussian_units(const CMat& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      const double re = m(i, j).real(), im = m(i, j).imag();
      if (re != 0.0 && re != 1.0 && re != -1.0) return false;
      if (im != 0.0 && im != 1.0 && im != -1.0) return false;
      if (re != 0.0 && im != 0.0) return false;
    }
  return true;
}

// GP eigenframe rotates along the first leaf axis at constant eigenvalues,
// so the transverse rotation connection is nonzero in that direction only
CoordFoliatedTorus rotating_model() {
  CoordFoliatedTorus m = CoordFoliatedTorus::flat(2, 2);
  m.name = "rotating_torus";
  std::vector<int> k = {1, 0, 0, 0};
  m.gp_at(0, 0).add_cos(k, 0.3);
  m.gp_at(1, 1).add_cos(k, -0.3);
  m.gp_at(0, 1).add_sin(k, 0.3);
  m.gp_at(1, 0).add_sin(k, 0.3);
  return m;
}

// transverse eigenvalues vary along x_0 while the eigenframe turns with x_1;
// GP = R(pi x_1)^T diag(1 + d, 1 - d) R(pi x_1) with d = 0.25 sin 2 pi x_0,
// expanded into integer-frequency terms, giving a curved transverse bundle
CoordFoliatedTorus curved_bundle_model() {
  CoordFoliatedTorus m = CoordFoliatedTorus::flat(2, 2);
  m.name = "curved_bundle_torus";
  std::vector<int> sum = {1, 1, 0, 0}, diff = {1, -1, 0, 0};
  m.gp_at(0, 0).add_sin(sum, 0.125);
  m.gp_at(0, 0).add_sin(diff, 0.125);
  m.gp_at(1, 1).add_sin(sum, -0.125);
  m.gp_at(1, 1).add_sin(diff, -0.125);
  for (auto* e : {&m.gp_at(0, 1), &m.gp_at(1, 0)}) {
    e->add_cos(diff, 0.125);
    e->add_cos(sum, -0.125);
  }
  return m;
}

std::vector<unsigned> masks_with_popcount(int q, int k) {
  std::vector<unsigned> out;
  for (unsigned m = 0; m < (1u << q); ++m) {
    int bits = 0;
    for (unsigned v = m; v; v &= v - 1) ++bits;
    if (bits == k) out.push_back(m);
  }
  return out;
}

}  // namespace

TEST_CASE("spin module relations are exact") {
  for (int p : {2, 4, 6, 8}) {
    CAPTURE(p);
    const SpinRep sr = build_spin_rep(p);
    REQUIRE(sr.dim() == (1 << (p / 2)));
    REQUIRE((int)sr.gamma.size() == p);
    const CMat id = CMat::Identity(sr.dim(), sr.dim());
    for (int i = 0; i < p; ++i) {
      CHECK(gaussian_units(sr.gamma[i]));
      CHECK(max_abs(sr.gamma[i] + sr.gamma[i].adjoint()) == 0.0);
      for (int j = 0; j < p; ++j) {
        const double delta = (i == j) ? 2.0 : 0.0;
        CHECK(max_abs(acomm(sr.gamma[i], sr.gamma[j]) + delta * id) == 0.0);
      }
      CHECK(max_abs(acomm(sr.grading, sr.gamma[i])) == 0.0);
    }
    CHECK(max_abs(sr.grading * sr.grading - id) == 0.0);
    CHECK(max_abs(sr.grading - sr.grading.adjoint()) == 0.0);
    CHECK(std::abs(sr.grading.trace()) == 0.0);
    CHECK(gaussian_units(sr.grading));
  }
  CHECK_THROWS_AS(build_spin_rep(3), std::invalid_argument);
  CHECK_THROWS_AS(build_spin_rep(10), std::invalid_argument);
}

TEST_CASE("smallest spin module in closed form") {
  const SpinRep sr = build_spin_rep(2);
  CMat sigma3(2, 2);
  sigma3 << 1, 0, 0, -1;
  CHECK(max_abs(sr.grading - sigma3) == 0.0);
  const CMat prod = sr.gamma[0] * sr.gamma[1];
  CHECK(max_abs(prod * prod + CMat::Identity(2, 2)) == 0.0);
}

TEST_CASE("exterior module relations are exact") {
  for (int q : {2, 4, 6}) {
    CAPTURE(q);
    const ExtRep er = build_ext_rep(q);
    REQUIRE(er.dim() == (1 << q));
    const CMat id = CMat::Identity(er.dim(), er.dim());
    for (int s = 0; s < q; ++s) {
      CHECK(max_abs(er.c[s] + er.c[s].adjoint()) == 0.0);
      CHECK(max_abs(er.chat[s] - er.chat[s].adjoint()) == 0.0);
      for (int t = 0; t < q; ++t) {
        const double delta = (s == t) ? 2.0 : 0.0;
        CHECK(max_abs(acomm(er.c[s], er.c[t]) + delta * id) == 0.0);
        CHECK(max_abs(acomm(er.chat[s], er.chat[t]) - delta * id) == 0.0);
        CHECK(max_abs(acomm(er.c[s], er.chat[t])) == 0.0);
      }
      CHECK(max_abs(acomm(er.tau, er.c[s])) == 0.0);
      CHECK(max_abs(comm(er.tau, er.chat[s])) == 0.0);
    }
    CHECK(max_abs(er.tau * er.tau - id) == 0.0);
    CHECK(max_abs(er.tau - er.tau.adjoint()) == 0.0);
    CHECK(gaussian_units(er.tau));
  }
  CHECK_THROWS_AS(build_ext_rep(3), std::invalid_argument);
  CHECK_THROWS_AS(build_ext_rep(8), std::invalid_argument);
}

TEST_CASE("exterior grading splits into equal eigenspaces") {
  const ExtRep er = build_ext_rep(2);
  Eigen::SelfAdjointEigenSolver<CMat> es(er.tau);
  REQUIRE(es.info() == Eigen::Success);
  const auto& ev = es.eigenvalues();
  for (int i = 0; i < 2; ++i) CHECK(ev(i) == doctest::Approx(-1.0));
  for (int i = 2; i < 4; ++i) CHECK(ev(i) == doctest::Approx(1.0));
  CHECK(std::abs(build_ext_rep(4).tau.trace()) == 0.0);
}

TEST_CASE("functor bundle ranks") {
  CHECK(PhiBundleSpec::trivial().rank(2) == 1);
  CHECK(PhiBundleSpec::trivial().is_trivial());
  CHECK(PhiBundleSpec::exterior(1).rank(4) == 4);
  CHECK(PhiBundleSpec::exterior(2).rank(4) == 6);
  CHECK(PhiBundleSpec::symmetric(2).rank(2) == 3);
  CHECK(PhiBundleSpec::symmetric(3).rank(4) == 20);
  CHECK_FALSE(PhiBundleSpec::exterior(1).is_trivial());
  PhiBundleSpec sum = PhiBundleSpec::exterior(1, 2);
  sum.terms.push_back({true, 2, 1});
  CHECK(sum.rank(2) == 2 * 2 + 3);
  CHECK_THROWS_AS(PhiBundleSpec{}.rank(2), std::invalid_argument);
}

TEST_CASE("derivation lift matches the functor action") {
  const int q = 4;
  CMat a = CMat::Zero(q, q), b = CMat::Zero(q, q);
  a(0, 1) = 1;
  a(1, 0) = -1;
  a(1, 3) = 2;
  a(3, 1) = -2;
  a(0, 2) = -3;
  a(2, 0) = 3;
  b(2, 3) = 1;
  b(3, 2) = -1;
  b(0, 3) = -2;
  b(3, 0) = 2;

  SUBCASE("degree one is the endomorphism itself") {
    CHECK(max_abs(phi_derivation_lift(PhiBundleSpec::exterior(1), q, a) - a) ==
          0.0);
  }
  SUBCASE("additive in the endomorphism and over summands") {
    PhiBundleSpec mix = PhiBundleSpec::exterior(2, 1);
    mix.terms.push_back({true, 2, 1});
    const CMat lab = phi_derivation_lift(mix, q, a + b);
    CHECK(max_abs(lab - phi_derivation_lift(mix, q, a) -
                  phi_derivation_lift(mix, q, b)) == 0.0);
    REQUIRE(lab.rows() == 6 + 10);
  }
  SUBCASE("skew input gives skew lift") {
    const CMat le = phi_derivation_lift(PhiBundleSpec::exterior(2), q, a);
    CHECK(max_abs(le + le.adjoint()) == 0.0);
    const CMat ls = phi_derivation_lift(PhiBundleSpec::symmetric(2), q, a);
    CHECK(max_abs(ls + ls.adjoint()) <= 1e-13);
  }
  SUBCASE("top exterior power collapses to the trace") {
    const CMat top = phi_derivation_lift(PhiBundleSpec::exterior(q), q, a);
    REQUIRE(top.rows() == 1);
    CHECK(std::abs(top(0, 0) - a.trace()) == 0.0);
    const CMat two = phi_derivation_lift(PhiBundleSpec::exterior(2), 2,
                                         a.topLeftCorner(2, 2));
    REQUIRE(two.rows() == 1);
    CHECK(std::abs(two(0, 0) - a.topLeftCorner(2, 2).trace()) == 0.0);
  }
  SUBCASE("exponential of the lift equals the minor matrix of the exponential") {
    const CMat lift = phi_derivation_lift(PhiBundleSpec::exterior(2), q, a);
    const CMat expl = lift.exp();
    const CMat qmat = a.exp();
    const auto basis = masks_with_popcount(q, 2);
    REQUIRE((int)basis.size() == lift.rows());
    auto bits = [](unsigned m) {
      std::vector<int> out;
      for (int s = 0; s < 8; ++s)
        if (m & (1u << s)) out.push_back(s);
      return out;
    };
    for (int r = 0; r < (int)basis.size(); ++r)
      for (int c = 0; c < (int)basis.size(); ++c) {
        const auto t = bits(basis[r]), s = bits(basis[c]);
        const std::complex<double> minor =
            qmat(t[0], s[0]) * qmat(t[1], s[1]) -
            qmat(t[0], s[1]) * qmat(t[1], s[0]);
        CHECK(std::abs(expl(r, c) - minor) <= 1e-10);
      }
  }
  SUBCASE("symmetric square intertwines the tensor-square derivation") {
    const int q3 = 3;
    CMat a3 = CMat::Zero(q3, q3);
    a3(0, 1) = 1;
    a3(1, 0) = -1;
    a3(1, 2) = -2;
    a3(2, 1) = 2;
    const CMat lift = phi_derivation_lift(PhiBundleSpec::symmetric(2), q3, a3);
    // embed normalized monomials e_i e_j into the tensor square
    Eigen::MatrixXcd embed = Eigen::MatrixXcd::Zero(q3 * q3, 6);
    int col = 0;
    const double inv_rt2 = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < q3; ++i)
      for (int j = i; j < q3; ++j, ++col) {
        if (i == j)
          embed(i * q3 + i, col) = 1.0;
        else {
          embed(i * q3 + j, col) = inv_rt2;
          embed(j * q3 + i, col) = inv_rt2;
        }
      }
    const CMat tensor = kron(a3, CMat::Identity(q3, q3)) +
                        kron(CMat::Identity(q3, q3), a3);
    CHECK(max_abs(embed * lift - tensor * embed) <= 1e-13);
  }
}

TEST_CASE("quadratic Clifford lift agrees with the functor lift degreewise") {
  for (int q : {2, 4}) {
    CAPTURE(q);
    const ExtRep er = build_ext_rep(q);
    CMat a = CMat::Zero(q, q);
    a(0, 1) = 2;
    a(1, 0) = -2;
    if (q == 4) {
      a(1, 2) = -1;
      a(2, 1) = 1;
      a(0, 3) = 3;
      a(3, 0) = -3;
    }
    CMat quad = CMat::Zero(er.dim(), er.dim());
    for (int s = 0; s < q; ++s)
      for (int t = 0; t < q; ++t)
        quad += 0.25 * a(s, t) *
                (er.c[s] * er.c[t] - er.chat[s] * er.chat[t]);
    // permutation from the subset basis to the degree-stacked basis
    std::vector<int> order;
    for (int k = 0; k <= q; ++k)
      for (unsigned m : masks_with_popcount(q, k)) order.push_back((int)m);
    CMat stacked = CMat::Zero(er.dim(), er.dim());
    int at = 0;
    for (int k = 0; k <= q; ++k) {
      // quadratic coefficients a(s,t) = <nabla h_s, h_t> correspond to the
      // standard endomorphism matrix a^T
      const CMat block = phi_derivation_lift(PhiBundleSpec::exterior(k), q,
                                             CMat(a.transpose()));
      stacked.block(at, at, block.rows(), block.cols()) = block;
      at += (int)block.rows();
    }
    CMat perm = CMat::Zero(er.dim(), er.dim());
    for (int i = 0; i < er.dim(); ++i) perm(i, order[i]) = 1.0;
    CHECK(max_abs(perm * quad * perm.transpose() - stacked) == 0.0);
  }
}

TEST_CASE("graded tensor relations across the acceptance sizes") {
  for (auto [p, q] : std::vector<std::pair<int, int>>{
           {2, 2}, {2, 4}, {4, 2}, {4, 4}}) {
    CAPTURE(p);
    CAPTURE(q);
    const GradedFiber f =
        graded_tensor(build_spin_rep(p), build_ext_rep(q),
                      PhiBundleSpec::trivial());
    REQUIRE(f.dim == (1 << (p / 2)) * (1 << q));
    const CMat id = CMat::Identity(f.dim, f.dim);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) {
        const double delta = (i == j) ? 2.0 : 0.0;
        CHECK(max_abs(acomm(f.cf[i], f.cf[j]) + delta * id) == 0.0);
      }
    for (int s = 0; s < q; ++s)
      for (int t = 0; t < q; ++t) {
        const double delta = (s == t) ? 2.0 : 0.0;
        CHECK(max_abs(acomm(f.ch[s], f.ch[t]) + delta * id) == 0.0);
        CHECK(max_abs(acomm(f.chat[s], f.chat[t]) - delta * id) == 0.0);
        CHECK(max_abs(acomm(f.ch[s], f.chat[t])) == 0.0);
      }
    for (int i = 0; i < p; ++i) {
      for (int s = 0; s < q; ++s) {
        CHECK(max_abs(acomm(f.cf[i], f.ch[s])) == 0.0);
        CHECK(max_abs(comm(f.cf[i], f.chat[s])) == 0.0);
      }
      CHECK(max_abs(acomm(f.grading, f.cf[i])) == 0.0);
    }
    for (int s = 0; s < q; ++s) {
      CHECK(max_abs(acomm(f.grading, f.ch[s])) == 0.0);
      CHECK(max_abs(comm(f.grading, f.chat[s])) == 0.0);
    }
    CHECK(max_abs(f.grading * f.grading - id) == 0.0);
    CHECK(std::abs(f.grading.trace()) == 0.0);
  }
  SUBCASE("smallest graded fiber has total dimension eight") {
    const GradedFiber f = graded_tensor(build_spin_rep(2), build_ext_rep(2),
                                        PhiBundleSpec::trivial());
    CHECK(f.dim == 8);
    CHECK(((f.grading + CMat::Identity(8, 8)) / 2.0).trace().real() ==
          doctest::Approx(4.0));
  }
  SUBCASE("functor factor scales the dimension") {
    const GradedFiber f = graded_tensor(build_spin_rep(2), build_ext_rep(2),
                                        PhiBundleSpec::exterior(1));
    CHECK(f.dim == 16);
    const CMat id = CMat::Identity(16, 16);
    CHECK(max_abs(acomm(f.cf[0], f.ch[1])) == 0.0);
    CHECK(max_abs(acomm(f.cf[0], f.cf[0]) + 2.0 * id) == 0.0);
  }
}

TEST_CASE("connection lift vanishes on the flat model") {
  const auto cache = build_cache(CoordFoliatedTorus::flat(2, 2), 4);
  const GradedFiber f = graded_tensor(build_spin_rep(2), build_ext_rep(2),
                                      PhiBundleSpec::trivial());
  for (std::size_t pt : {std::size_t(0), std::size_t(7), std::size_t(255)})
    for (int mu = 0; mu < 4; ++mu)
      CHECK(max_abs(connection_lift_at(cache, f, pt, mu)) == 0.0);
}

TEST_CASE("connection lift concentrates in the metric-varying direction") {
  const auto cache = build_cache(rotating_model(), 8);
  const GradedFiber f = graded_tensor(build_spin_rep(2), build_ext_rep(2),
                                      PhiBundleSpec::trivial());
  double peak = 0.0, off_direction = 0.0, skew = 0.0, grade = 0.0;
  for (std::size_t pt = 0; pt < cache.npoints; pt += 37) {
    for (int mu = 0; mu < 4; ++mu) {
      const CMat lift = connection_lift_at(cache, f, pt, mu);
      if (mu == 0)
        peak = std::max(peak, max_abs(lift));
      else
        off_direction = std::max(off_direction, max_abs(lift));
      skew = std::max(skew, max_abs(lift + lift.adjoint()));
      grade = std::max(grade, max_abs(comm(lift, f.grading)));
    }
  }
  CHECK(peak > 1e-2);
  CHECK(off_direction <= 1e-12);
  CHECK(skew <= 1e-10);
  CHECK(grade <= 1e-12);
}

TEST_CASE("conformal transverse warp has trivial rotation lift") {
  // a conformal orthonormal frame absorbs the stretch: the induced rotation
  // connection vanishes and all fiber transport sits in the mixed blocks
  for (double eps : {1.0, 1.0 / 16.0}) {
    CAPTURE(eps);
    const auto cache = build_cache(
        CoordFoliatedTorus::sin_warped(2, 2, 0.5).with_epsilon(eps), 8);
    const GradedFiber f = graded_tensor(build_spin_rep(2), build_ext_rep(2),
                                        PhiBundleSpec::trivial());
    double worst = 0.0;
    for (std::size_t pt = 0; pt < cache.npoints; pt += 101)
      for (int mu = 0; mu < 4; ++mu)
        worst = std::max(worst, max_abs(connection_lift_at(cache, f, pt, mu)));
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("functor factor hooks into the connection lift") {
  const auto cache = build_cache(rotating_model(), 8);
  const GradedFiber base = graded_tensor(build_spin_rep(2), build_ext_rep(2),
                                         PhiBundleSpec::trivial());
  const GradedFiber rich = graded_tensor(build_spin_rep(2), build_ext_rep(2),
                                         PhiBundleSpec::exterior(1));
  const std::size_t pt = 66;
  for (int mu = 0; mu < 4; ++mu) {
    CMat a(2, 2);
    for (int s = 0; s < 2; ++s)
      for (int t = 0; t < 2; ++t) a(t, s) = cache.conn_at(pt, mu, 2 + s, 2 + t);
    const CMat expected =
        kron(connection_lift_at(cache, base, pt, mu), CMat::Identity(2, 2)) +
        kron(CMat::Identity(8, 8), a);
    CHECK(max_abs(connection_lift_at(cache, rich, pt, mu) - expected) <=
          1e-14);
  }
}

TEST_CASE("curvature lift through the functor factor") {
  const auto cache = build_cache(curved_bundle_model(), 8);
  const std::size_t pt = 635;  // x_0 = 1/8, away from the warp's zero set
  SUBCASE("trivial bundle carries zero curvature") {
    const GradedFiber f = graded_tensor(build_spin_rep(2), build_ext_rep(2),
                                        PhiBundleSpec::trivial());
    CHECK(max_abs(phi_curvature_lift_at(cache, f, pt, 0, 1)) == 0.0);
  }
  SUBCASE("degree one reproduces the curvature matrix") {
    const GradedFiber f = graded_tensor(build_spin_rep(2), build_ext_rep(2),
                                        PhiBundleSpec::exterior(1));
    CMat r(2, 2);
    double nonzero = 0.0;
    for (int s = 0; s < 2; ++s)
      for (int t = 0; t < 2; ++t) {
        r(t, s) = cache.curv_p_at(pt, 0, 1, s, t);
        nonzero = std::max(nonzero, std::abs(r(t, s)));
      }
    CHECK(nonzero > 1e-3);
    CHECK(max_abs(r + r.adjoint()) <= 1e-10);
    const CMat lift = phi_curvature_lift_at(cache, f, pt, 0, 1);
    CHECK(max_abs(lift - kron(CMat::Identity(8, 8), r)) == 0.0);
    CHECK(max_abs(lift + phi_curvature_lift_at(cache, f, pt, 1, 0)) == 0.0);
    CHECK(max_abs(phi_curvature_lift_at(cache, f, pt, 2, 2)) == 0.0);
  }
  SUBCASE("top transverse power collapses to the diagonal sum") {
    const GradedFiber f = graded_tensor(build_spin_rep(2), build_ext_rep(2),
                                        PhiBundleSpec::exterior(2));
    const double direct =
        cache.curv_p_at(pt, 0, 1, 0, 0) + cache.curv_p_at(pt, 0, 1, 1, 1);
    const CMat lift = phi_curvature_lift_at(cache, f, pt, 0, 1);
    CHECK(max_abs(lift - direct * CMat::Identity(8, 8)) == 0.0);
    CHECK(std::abs(direct) <= 1e-10);
  }
}
