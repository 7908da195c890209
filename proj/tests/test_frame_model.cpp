#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>
#include <vector>

#include "folia/frame_model.hpp"
#include "folia/report.hpp"

using namespace folia;

namespace {

// independent Koszul evaluation at a fixed numeric scale: solve the rescaled
// metric's connection directly from the defining formula, no shared code path
Rational oracle_x(const LieFrameModel& m, int a, int b, int k, const Rational& t) {
  auto w = [&](int i) { return i < m.p ? Rational(1) : Rational(1) / (t * t); };
  Rational two_wk_x = m.c(a, b, k) * w(k) - m.c(b, k, a) * w(a) + m.c(k, a, b) * w(b);
  return two_wk_x / (2 * w(k));
}

LieFrameModel solvable_model(const Rational& l1, const Rational& l2) {
  // [e0,e1] = l1 e1, [e0,e2] = l2 e2: curved leaves' complement with nonzero
  // mean curvature, the one block the nilpotent corpus cannot exercise
  Tensor3<Rational> c(3);
  c(0, 1, 1) = l1;
  c(1, 0, 1) = -l1;
  c(0, 2, 2) = l2;
  c(2, 0, 2) = -l2;
  return LieFrameModel::make(3, 1, std::move(c), "solvable");
}

std::vector<LieFrameModel> model_corpus(int random_count) {
  std::vector<LieFrameModel> ms;
  ms.push_back(LieFrameModel::abelian(4, 2));
  ms.push_back(LieFrameModel::abelian(5, 3));
  ms.push_back(LieFrameModel::kodaira_thurston(true));
  ms.push_back(LieFrameModel::kodaira_thurston(false));
  ms.push_back(solvable_model(1, 1));
  ms.push_back(solvable_model(Rational(1, 2), 2));
  std::mt19937_64 rng(42);
  for (int i = 0; i < random_count; ++i) {
    int n = 4 + static_cast<int>(rng() % 3);
    int p = 1 + static_cast<int>(rng() % (n - 2));
    ms.push_back(random_two_step_model(rng, n, p, i % 2 == 0));
  }
  return ms;
}

void require_all_pass(const CheckReport& rep) {
  for (const auto& row : rep.rows) {
    CAPTURE(rep.model);
    CAPTURE(row.law);
    CAPTURE(row.subject);
    CAPTURE(row.detail);
    REQUIRE(row.pass);
  }
}

}  // namespace

TEST_CASE("validation rejects broken bracket tables") {
  Tensor3<Rational> bad(3);
  bad(0, 1, 2) = 1;  // no antisymmetric partner
  CHECK_THROWS_AS(LieFrameModel::make(3, 1, bad), std::invalid_argument);

  // [e0,e1]=e1, [e0,e2]=e2, [e1,e2]=e0 breaks Jacobi
  Tensor3<Rational> jac(3);
  jac(0, 1, 1) = 1;
  jac(1, 0, 1) = -1;
  jac(0, 2, 2) = 1;
  jac(2, 0, 2) = -1;
  jac(1, 2, 0) = 1;
  jac(2, 1, 0) = -1;
  try {
    LieFrameModel::make(3, 1, jac);
    FAIL("expected Jacobi rejection");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("Jacobi identity fails at (0,1,2)") != std::string::npos);
  }

  // Heisenberg with the non-integrable plane as leaves
  Tensor3<Rational> heis(3);
  heis(0, 1, 2) = 1;
  heis(1, 0, 2) = -1;
  try {
    LieFrameModel::make(3, 2, heis);
    FAIL("expected leaf-closure rejection");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("leaf distribution not closed") != std::string::npos);
  }

  CHECK_THROWS_AS(LieFrameModel::abelian(3, 4), std::invalid_argument);
}

TEST_CASE("Koszul table solves the rescaled metric connection") {
  const std::vector<Rational> ts = {Rational(1), Rational(1, 2), Rational(1, 3),
                                    Rational(3, 2)};
  for (const auto& m : model_corpus(20)) {
    FrameConnection fc = frame_connection(m);
    const ExactScalar one(1);
    const ExactScalar inv_eps = one / ExactScalar::eps();
    auto weight = [&](int i) -> const ExactScalar& { return i < m.p ? one : inv_eps; };
    for (int a = 0; a < m.n; ++a)
      for (int b = 0; b < m.n; ++b)
        for (int k = 0; k < m.n; ++k) {
          CAPTURE(m.name);
          CAPTURE(a);
          CAPTURE(b);
          CAPTURE(k);
          // independent numeric oracle at several scales
          for (const auto& t : ts) REQUIRE(fc.x(a, b, k).eval(t) == oracle_x(m, a, b, k, t));
          // torsion-freeness and rescaled-metric compatibility, exact in t
          ExactScalar torsion = fc.x(a, b, k) - fc.x(b, a, k);
          REQUIRE(torsion == ExactScalar(Rational(m.c(a, b, k))));
          ExactScalar compat = weight(k) * fc.x(a, b, k) + weight(b) * fc.x(a, k, b);
          REQUIRE(compat.is_zero());
          // base table is the t=1 slice
          REQUIRE(fc.x(a, b, k).eval(Rational(1)) == fc.base(a, b, k));
        }
  }
}

TEST_CASE("frozen Heisenberg-type values") {
  LieFrameModel deforming = LieFrameModel::kodaira_thurston(false);
  LieFrameModel rigid = LieFrameModel::kodaira_thurston(true);

  FrameConnection fc = frame_connection(deforming);
  CHECK(fc.base(0, 2, 3) == Rational(1, 2));
  CHECK(fc.base(0, 3, 2) == Rational(-1, 2));

  Tensor3<Rational> w = omega_tensor(deforming);
  CHECK(w(0, 2, 3) == -1);
  CHECK(w(0, 3, 2) == -1);
  CHECK(w(1, 2, 3) == 0);
  Tensor3<Rational> dot = bott_connection(deforming);
  CHECK(dot(0, 2, 3) == 1);

  Tensor3<Rational> wr = omega_tensor(rigid);
  for (int u = 2; u < 4; ++u)
    for (int v = 2; v < 4; ++v) {
      CHECK(wr(0, u, v) == 0);
      CHECK(wr(1, u, v) == 0);
    }

  FrameCurvature cd = frame_curvature(deforming);
  CHECK(cd.scalar == ExactScalar(Rational(-1, 2)));  // constant in t
  CHECK(cd.scalar.eval(Rational(1)) == Rational(-1, 2));
  auto lim = cd.scalar.limit_at_zero();
  CHECK(lim.finite);
  CHECK(lim.value == Rational(-1, 2));

  FrameCurvature cr = frame_curvature(rigid);
  CHECK(cr.scalar == ExactScalar(Poly::monomial(BigInt(-1), 4), Poly(BigInt(2))));
  CHECK(cr.scalar.eval(Rational(1)) == Rational(-1, 2));
  CHECK(cr.scalar.limit_at_zero().value == 0);

  // complements are abelian here, so every model stays curvature-flat there
  FrameEval ev = evaluate_frame_geometry(rigid, Rational(1, 2));
  CHECK(ev.k_scalar == Rational(-1, 32));
  CHECK(ev.rperp_at(2, 3)(0, 1) == Rational(-1, 32));
  CHECK(ev.rperp_at(2, 3)(1, 0) == Rational(1, 32));
  CHECK(ev.rperp_at(3, 2)(0, 1) == Rational(1, 32));
}

TEST_CASE("rescaling laws hold across the corpus") {
  for (const auto& m : model_corpus(100)) require_all_pass(verify_rescaling_laws(m));
}

TEST_CASE("partial connection, omega, and adiabatic limits") {
  for (const auto& m : model_corpus(100)) {
    require_all_pass(omega_five_term_check(m));
    require_all_pass(adiabatic_limit_check(m));
  }
}

TEST_CASE("curvature block expansions are exact in t") {
  for (const auto& m : model_corpus(100)) require_all_pass(verify_curvature_expansion(m));
}

TEST_CASE("flatness and unitarized-connection identities") {
  for (const auto& m : model_corpus(100)) require_all_pass(flatness_and_omega_identities(m));
}

TEST_CASE("difference tensor block structure") {
  for (const auto& m : model_corpus(100)) require_all_pass(s_tensor_check(m));
}

TEST_CASE("full suite merge and fixed-scale evaluation") {
  LieFrameModel m = LieFrameModel::kodaira_thurston(false);
  CheckReport rep = verify_frame_suite(m);
  CHECK(rep.all_pass());
  CHECK(rep.rows.size() > 15);
  CHECK(rep.failures() == 0);

  for (const auto& model : model_corpus(10)) {
    for (const auto& t : {Rational(1), Rational(1, 2), Rational(1, 4)}) {
      FrameEval ev = evaluate_frame_geometry(model, t);
      FrameCurvature cur = frame_curvature(model);
      CHECK(ev.k_scalar == cur.scalar.eval(t));
      // complement curvature matrices are skew (metric connection)
      for (int a = 0; a < model.n; ++a)
        for (int b = 0; b < model.n; ++b) {
          const RatMat& r = ev.rperp_at(a, b);
          CHECK((r + r.transpose()).is_zero());
          CHECK((r + ev.rperp_at(b, a)).is_zero());
        }
      // evaluated tables match the exact ones pointwise
      FrameConnection fc = frame_connection(model);
      for (int a = 0; a < model.n; ++a)
        for (int b = 0; b < model.n; ++b)
          for (int k = 0; k < model.n; ++k) {
            CHECK(ev.gammaE(a, b, k) == fc.gammaE(a, b, k).eval(t));
            CHECK(ev.cE(a, b, k) == fc.cE(a, b, k).eval(t));
          }
    }
  }
  CHECK_THROWS_AS(evaluate_frame_geometry(m, Rational(0)), std::invalid_argument);
}

TEST_CASE("abelian models are totally flat") {
  LieFrameModel m = LieFrameModel::abelian(5, 2);
  FrameConnection fc = frame_connection(m);
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b)
      for (int k = 0; k < 5; ++k) CHECK(fc.x(a, b, k).is_zero());
  FrameCurvature cur = frame_curvature(m);
  CHECK(cur.scalar.is_zero());
  for (const auto& r : cur.r4) CHECK(r.is_zero());
}

TEST_CASE("random two-step models satisfy the documented shape") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    LieFrameModel m = random_two_step_model(rng, 4 + static_cast<int>(rng() % 3), 2, true);
    m.validate();
    // dyadic draw: denominators are powers of two
    for (int a = 0; a < m.n; ++a)
      for (int b = 0; b < m.n; ++b)
        for (int k = 0; k < m.n; ++k) {
          BigInt den = boost::multiprecision::denominator(m.c(a, b, k));
          CHECK((den == 1 || den == 2));
        }
  }
  CHECK_THROWS_AS(random_two_step_model(rng, 2, 2, true), std::invalid_argument);
}
