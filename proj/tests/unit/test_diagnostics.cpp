#include <cmath>
#include <random>
#include <vector>

#include "brwlab/diagnostics.hpp"
#include "brwlab/error.hpp"
#include "brwlab/sizebias.hpp"
#include "doctest.h"

using namespace brwlab;

namespace {

BranchingModel det_binary() {
  return {1.0, DeterministicCount{2}, FixedPositions{{1.0, -1.0}}, Coupling::deterministic_fanout};
}
BranchingModel gw_geometric() { return {0.0, GeometricCount{1.0 / 3.0}, NoDisplacement{}, Coupling::independent}; }

// Sum of the both-sided identity by brute force over a rectangle.
double brute_lhs(const std::vector<double>& a, const std::vector<double>& R, std::size_t m) {
  double s = 0.0;
  for (std::size_t n = 1; n <= m; ++n)
    for (std::size_t k = n; k <= R.size(); ++k) s += a[n - 1] * R[k - 1];
  return s;
}

}  // namespace

TEST_CASE("sum by parts examples") {
  std::vector<double> ones(5, 1.0);
  std::vector<double> R{1.0, 2.0, 3.0};
  auto s = sum_by_parts_check(ones, R, 2);
  CHECK(s.lhs == 11.0);
  CHECK(s.rhs == 11.0);

  std::vector<double> zero(4, 0.0);
  auto z = sum_by_parts_check(ones, zero, 3);
  CHECK(z.lhs == 0.0);
  CHECK(z.rhs == 0.0);

  // m past the support: only R_n times partial sums of a remains.
  auto past = sum_by_parts_check(ones, R, 5);
  CHECK(past.lhs == past.rhs);
  CHECK(past.rhs == 1.0 * 1 + 2.0 * 2 + 3.0 * 3);
  CHECK_THROWS_AS(sum_by_parts_check(ones, R, 6), DomainError);
}

TEST_CASE("sum by parts holds on random inputs") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(1, 40), val(0, 1000);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t m = static_cast<std::size_t>(len(rng));
    std::vector<double> a(m), R(static_cast<std::size_t>(len(rng)));
    bool integer = trial % 2 == 0;
    for (auto& x : a) x = integer ? val(rng) : u(rng);
    for (auto& x : R) x = integer ? val(rng) : u(rng);
    auto s = sum_by_parts_check(a, R, m);
    if (integer) {
      REQUIRE(s.lhs == s.rhs);
      REQUIRE(s.lhs == brute_lhs(a, R, m));
    } else {
      REQUIRE(s.lhs == doctest::Approx(s.rhs).epsilon(1e-13));
    }
  }
}

TEST_CASE("series trace on the deterministic model is identically zero") {
  SeriesOptions opt;
  opt.m_max = 10;
  opt.depth = 20;
  auto t = series_trace(det_binary(), RegVarFn(Role::a, 0.0), 20, 3, opt);
  CHECK(t.surviving == 20);
  for (const auto& r : t.replicas) {
    CHECK(r.w_hat == doctest::Approx(1.0).epsilon(1e-13));
    for (double v : r.T) CHECK(std::fabs(v) < 1e-12);
  }
  CHECK(t.proxy_error < 1e-13);
}

TEST_CASE("series trace preconditions and extinction") {
  RegVarFn one(Role::a, 0.0);
  SeriesOptions bad;
  bad.m_max = 30;
  bad.depth = 50;
  CHECK_THROWS_AS(series_trace(gw_geometric(), one, 10, 1, bad), DomainError);

  SeriesOptions opt;
  opt.m_max = 10;
  opt.depth = 20;
  auto t = series_trace(gw_geometric(), one, 400, 5, opt);
  std::size_t extinct = 0;
  for (const auto& r : t.replicas) {
    CHECK(r.T.size() == 10);
    for (double v : r.T) CHECK(std::isfinite(v));
    if (!r.survived) {
      ++extinct;
      CHECK(r.stabilizing);
      CHECK(r.w_hat == 0.0);
    }
  }
  // Extinction probability 1/2 for mean-2 geometric offspring.
  CHECK(std::fabs(extinct / 400.0 - 0.5) < 0.1);
}

TEST_CASE("oscillation shrinks when m_max doubles") {
  RegVarFn one(Role::a, 0.0);
  SeriesOptions lo;
  lo.m_max = 15;
  lo.depth = 30;
  SeriesOptions hi;
  hi.m_max = 30;
  hi.depth = 60;
  auto a = series_trace(gw_geometric(), one, 2000, 11, lo);
  auto b = series_trace(gw_geometric(), one, 2000, 11, hi);
  CHECK(median_oscillation(b) / median_oscillation(a) < 0.9);
}

TEST_CASE("series trace is independent of worker count") {
  RegVarFn one(Role::a, 0.0);
  SeriesOptions o1;
  o1.m_max = 8;
  o1.depth = 16;
  SeriesOptions o4 = o1;
  o4.workers = 4;
  auto a = series_trace(gw_geometric(), one, 100, 9, o1);
  auto b = series_trace(gw_geometric(), one, 100, 9, o4);
  for (std::size_t i = 0; i < 100; ++i) CHECK(a.replicas[i].T == b.replicas[i].T);
}

TEST_CASE("renewal limit on the deterministic binary model") {
  SpineEstimator est(det_binary());
  auto mu = drift_mu(est, 1, 1);
  REQUIRE(mu.exact);
  RegVarFn b(Role::b, 1.0);
  std::vector<double> xs{6.0, 12.0, 24.0};
  auto r = renewal_limit_Q(det_binary(), b, xs, mu.value, 1, 1);
  REQUIRE(r.points.size() == 3);
  // W is identically one.
  for (const auto& p : r.points) CHECK(p.predicted == doctest::Approx(1.0 / (2.0 * mu.value * mu.value)));
  auto s = summarize(r);
  CHECK(s[1].median_rel_dev <= s[0].median_rel_dev);
  CHECK(s[2].median_rel_dev <= s[1].median_rel_dev);
  CHECK(r.points[1].q_ratio == doctest::Approx(1.0 / (2.0 * mu.value * mu.value)).epsilon(0.2));
}

TEST_CASE("renewal ratio is proportional to the replica's W") {
  RegVarFn b(Role::b, 1.0);
  std::vector<double> xs{12.0};
  auto r = renewal_limit_Q(gw_geometric(), b, xs, std::log(2.0), 400, 4);
  CHECK(r.surviving > 150);
  auto s = summarize(r);
  REQUIRE(s.size() == 1);
  CHECK(s[0].iqr_ratio_over_w <= 0.25 * s[0].median_ratio_over_w);
}

TEST_CASE("moment equivalence verdicts") {
  RegVarFn one(Role::a, 0.0);
  auto det = moment_equivalence(det_binary(), one, 200, 1, 10);
  CHECK(det.w_side.estimate == 0.0);
  CHECK(det.w1_side.estimate == 0.0);
  CHECK(det.agree());

  auto geo = moment_equivalence(gw_geometric(), one, 400000, 2, 30);
  CHECK_FALSE(geo.w_side.diverging);
  CHECK_FALSE(geo.w1_side.diverging);

  BranchingModel heavy{0.0, LogParetoCount{2.5, 2}, NoDisplacement{}, Coupling::independent};
  auto div = moment_equivalence(heavy, one, 40000, 3, 6);
  CHECK(div.w1_side.diverging);
  CHECK(div.w_side.slope > 0.0);
}
