#include <cmath>
#include <vector>

#include "brwlab/error.hpp"
#include "brwlab/sizebias.hpp"
#include "doctest.h"

using namespace brwlab;

namespace {

const double kE = std::exp(1.0);
const double kYp = kE / (kE + 1.0 / kE);
const double kYm = (1.0 / kE) / (kE + 1.0 / kE);

BranchingModel det_binary() {
  return {1.0, DeterministicCount{2}, FixedPositions{{1.0, -1.0}}, Coupling::deterministic_fanout};
}
BranchingModel gw_geometric() { return {0.0, GeometricCount{1.0 / 3.0}, NoDisplacement{}, Coupling::independent}; }
BranchingModel poisson_normal(double gamma = 1.0) {
  return {gamma, PoissonCount{3.0}, NormalDisplacement{0.0, 1.0}, Coupling::independent};
}

}  // namespace

TEST_CASE("exact atoms of the deterministic binary model") {
  SpineEstimator est(det_binary());
  REQUIRE(est.mode() == SpineMode::exact_atoms);
  REQUIRE(est.atoms().size() == 2);
  CHECK(est.atoms()[0].z == doctest::Approx(kYm).epsilon(1e-14));
  CHECK(est.atoms()[0].prob == doctest::Approx(kYm).epsilon(1e-14));
  CHECK(est.atoms()[1].prob == doctest::Approx(kYp).epsilon(1e-14));
  CHECK(est.atoms()[0].prob + est.atoms()[1].prob == doctest::Approx(1.0).epsilon(1e-15));
  auto one = expect_k(est, [](double, double) { return 1.0; }, 0, 0);
  CHECK(one.exact);
  CHECK(one.value == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("drift of the deterministic binary model") {
  SpineEstimator est(det_binary());
  double oracle = -(kYp * std::log(kYp) + kYm * std::log(kYm));
  auto mu = drift_mu(est, 0, 0);
  CHECK(mu.exact);
  CHECK(mu.value == doctest::Approx(oracle).epsilon(1e-13));
  CHECK(mu.value == doctest::Approx(0.365334).epsilon(1e-5));
}

TEST_CASE("Galton-Watson: Z is the point mass 1 / E L") {
  SpineEstimator est(gw_geometric());
  REQUIRE(est.mode() == SpineMode::closed_form);
  auto ez = expect_kz(est, [](double z) { return z; }, 0, 0);
  auto ez2 = expect_kz(est, [](double z) { return z * z; }, 0, 0);
  CHECK(ez.value == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::fabs(ez2.value - ez.value * ez.value) < 1e-12);
  CHECK(drift_mu(est, 0, 0).value == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("normalization and drift under weighted Monte Carlo") {
  SpineEstimator est(poisson_normal());
  REQUIRE(est.mode() == SpineMode::weighted_mc);
  auto one = expect_k(est, [](double, double) { return 1.0; }, 40000, 1, 4);
  CHECK(std::fabs(one.value - 1.0) < 3.0 * one.se);
  auto mu = drift_mu(est, 40000, 2, 4);
  CHECK(std::fabs(mu.value - (std::log(3.0) - 0.5)) < 3.0 * mu.se);
  CHECK(mu.value > 5.0 * mu.se);
  CHECK_FALSE(mu.unstable());
  auto gw = expect_k(SpineEstimator(gw_geometric()), [](double, double) { return 1.0; }, 40000, 3, 4);
  CHECK(std::fabs(gw.value - 1.0) < 3.0 * gw.se);
}

TEST_CASE("drift at the contraction boundary raises NonContracting") {
  // E log Z = log 3 - gamma^2 / 2 vanishes at gamma = sqrt(2 log 3).
  SpineEstimator est(poisson_normal(std::sqrt(2.0 * std::log(3.0))));
  CHECK_THROWS_AS(drift_mu(est, 20000, 4, 4), NonContracting);
  SpineEstimator past(poisson_normal(2.0));
  try {
    drift_mu(past, 20000, 5, 4);
    FAIL("expected NonContracting");
  } catch (const NonContracting& e) {
    CHECK(e.estimate() < 0.0);
    CHECK(e.se() > 0.0);
  }
}

TEST_CASE("product identity: exact cases") {
  SpineEstimator det(det_binary());
  auto c1 = product_identity_check(det, [](double) { return 1.0; }, 1, 0, 0);
  CHECK(c1.left.value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c1.right.value == doctest::Approx(1.0).epsilon(1e-15));
  auto c2 = product_identity_check(det, [](double y) { return y; }, 2, 0, 0);
  double ez = kYp * kYp + kYm * kYm;
  double four = 0.0;
  for (double a : {kYp, kYm})
    for (double b : {kYp, kYm}) four += (a * b) * (a * b);
  CHECK(c2.left.value == doctest::Approx(ez * ez).epsilon(1e-14));
  CHECK(c2.right.value == doctest::Approx(four).epsilon(1e-14));
  CHECK(c2.z == 0.0);

  SpineEstimator gw(gw_geometric());
  auto c3 = product_identity_check(gw, [](double y) { return y < 1.0 ? 1.0 : 0.0; }, 3, 20000, 6, 4);
  CHECK(c3.left.exact);
  CHECK(c3.left.value == 1.0);
  CHECK(std::fabs(c3.z) <= 3.0);
}

TEST_CASE("product identity under Monte Carlo") {
  SpineEstimator est(poisson_normal(), {1e5});
  auto r = [](double y) { return std::min(y, 0.05); };
  for (std::size_t n = 1; n <= 3; ++n) {
    auto c = product_identity_check(est, r, n, 20000, 7 + n, 4);
    CHECK_MESSAGE(std::fabs(c.z) <= 3.0, "n = " << n << " z = " << c.z);
  }
}

TEST_CASE("size-biased S") {
  auto det = sample_S(SpineEstimator(det_binary()), 1000, 1, 2);
  for (double s : det.s) CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(det.acceptance == 1.0);

  SpineEstimator gw(gw_geometric());
  // E S = E W_1^2 = Var L / 4 + 1 = 2.5 for geometric p = 1/3.
  auto es = expect_k(gw, [](double, double s) { return s; }, 100000, 2, 4);
  CHECK(std::fabs(es.value - 2.5) < 3.0 * es.se);
  auto ss = sample_S(gw, 50000, 3, 4);
  auto ms = mean_se(ss.s);
  CHECK(std::fabs(ms.mean - 2.5) < 3.0 * ms.se + 0.05);
  CHECK(ss.envelope > 0.0);
  CHECK(ss.acceptance > 0.0);
  CHECK(ss.acceptance < 1.0);
  for (double s : ss.s) CHECK(s > 0.0);
}

TEST_CASE("weighted log Z draws") {
  SpineEstimator est(poisson_normal());
  auto d = weighted_log_Z(est, 20000, 9);
  double total = 0.0, mu = 0.0;
  for (std::size_t i = 0; i < d.weight.size(); ++i) {
    total += d.weight[i];
    mu -= d.weight[i] * d.log_z[i];
  }
  CHECK(total / 20000.0 == doctest::Approx(1.0).epsilon(0.03));
  CHECK(mu / 20000.0 == doctest::Approx(std::log(3.0) - 0.5).epsilon(0.05));
}
