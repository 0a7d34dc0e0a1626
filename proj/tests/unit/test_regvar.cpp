#include <cmath>
#include <random>
#include <vector>

#include "brwlab/error.hpp"
#include "brwlab/regvar.hpp"
#include "doctest.h"

using namespace brwlab;

namespace {

const double kE = std::exp(1.0);

std::vector<RegVarFn> a_families() {
  return {
      RegVarFn(Role::a, 0.0),
      RegVarFn(Role::a, 0.5),
      RegVarFn(Role::a, -0.5),
      RegVarFn(Role::a, 1.0, {1.0, 1.0, 0.0}),
      RegVarFn(Role::a, 0.0, {2.0, 0.0, 2.0}),
      RegVarFn(Role::a, 0.25, {0.5, 1.5, 1.0}),
  };
}

// Independent trapezoid on a fine uniform grid.
template <class F>
double trapezoid(F f, double a, double b, int n) {
  double h = (b - a) / n, s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) s += f(a + i * h);
  return s * h;
}

}  // namespace

TEST_CASE("eval matches closed forms") {
  CHECK(eval(RegVarFn(Role::a, 0.5), 4.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(eval(RegVarFn(Role::a, 0.0), 10.0) == 1.0);
  RegVarFn xlog(Role::a, 1.0, {1.0, 1.0, 0.0});
  double x = kE * kE - kE;
  CHECK(eval(xlog, x) == doctest::Approx(x * 2.0).epsilon(1e-14));
  CHECK_THROWS_AS(eval(xlog, 0.0), DomainError);
  CHECK_THROWS_AS(eval(xlog, -1.0), DomainError);
}

TEST_CASE("role restrictions") {
  CHECK_THROWS_AS(RegVarFn(Role::a, -1.0), DomainError);
  CHECK_THROWS_AS(RegVarFn(Role::a, -1.5), DomainError);
  CHECK_THROWS_AS(RegVarFn(Role::a, 0.0, {1.0, -1.0, 0.0}), DomainError);
  CHECK_THROWS_AS(RegVarFn(Role::b, 0.0), DomainError);
  CHECK_THROWS_AS(RegVarFn(Role::c, 1.0), DomainError);
  CHECK_NOTHROW(RegVarFn(Role::a, 0.5, {1.0, -1.0, 0.0}));
}

TEST_CASE("derive_b and derive_c") {
  RegVarFn b = derive_b(RegVarFn(Role::a, 0.0));
  CHECK(b.role() == Role::b);
  CHECK(b.exponent() == 1.0);
  RegVarFn half(Role::a, 0.5);
  CHECK(derive_b(half)(4.0) == doctest::Approx(8.0).epsilon(1e-15));
  RegVarFn c = derive_c(derive_b(half));
  CHECK(c.exponent() == 2.5);
  CHECK(c(4.0) == doctest::Approx(32.0).epsilon(1e-15));
  CHECK_THROWS_AS(derive_c(half), DomainError);
}

TEST_CASE("derive_b multiplies by x for every family") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lx(-5.0, 12.0);
  for (const auto& a : a_families()) {
    RegVarFn b = derive_b(a);
    CAPTURE(a.describe());
    for (int i = 0; i < 1000; ++i) {
      double x = std::exp(lx(rng));
      CHECK(b(x) == doctest::Approx(x * a(x)).epsilon(1e-13));
    }
  }
}

TEST_CASE("role a with exponent 0 is non-decreasing") {
  for (const auto& a : a_families()) {
    if (a.exponent() != 0.0) continue;
    double prev = 0.0;
    for (double x = 1e-3; x < 1e8; x *= 1.1) {
      CHECK(a(x) >= prev);
      prev = a(x);
    }
  }
}

TEST_CASE("parse_regvar") {
  auto f = parse_regvar("b:x^2");
  CHECK(f.role() == Role::b);
  CHECK(f.exponent() == 2.0);
  CHECK(f.slowly_varying().is_constant());
  auto g = parse_regvar("a:x^0.5*log^1*loglog^2*3");
  CHECK(g.exponent() == 0.5);
  CHECK(g.slowly_varying().log_power == 1.0);
  CHECK(g.slowly_varying().loglog_power == 2.0);
  CHECK(g.slowly_varying().constant == 3.0);
  CHECK(parse_regvar("a:1").exponent() == 0.0);
  CHECK(parse_regvar("b:x*log").slowly_varying().log_power == 1.0);
  CHECK_THROWS_AS(parse_regvar("x^2"), ConfigError);
  CHECK_THROWS_AS(parse_regvar("b:y^2"), ConfigError);
  auto h = parse_regvar(g.describe());
  CHECK(h.exponent() == g.exponent());
  CHECK(h.slowly_varying().constant == g.slowly_varying().constant);
}

TEST_CASE("lambda_beta") {
  CHECK(lambda_beta(RegVarFn(Role::b, 1.0), kE) == doctest::Approx(1.0 / kE).epsilon(1e-15));
  CHECK(lambda_beta(RegVarFn(Role::b, 2.0), kE * kE) == doctest::Approx(1.0 / (kE * kE)).epsilon(1e-15));
  RegVarFn b(Role::b, 1.0, {1.0, 1.0, 0.0});
  CHECK(lambda_beta(b, 10.0) == doctest::Approx(std::log(kE + std::log(10.0)) / 10.0).epsilon(1e-14));
  CHECK_THROWS_AS(lambda_beta(b, 1.0), DomainError);
  // Regularly varying with exponent -1.
  double r = lambda_beta(b, 2e12) / lambda_beta(b, 1e12);
  CHECK(r == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("karamata_sum_ratio") {
  CHECK(karamata_sum_ratio(RegVarFn(Role::b, 2.0), 1000) ==
        doctest::Approx(333833500.0 / (1e9 / 3.0)).epsilon(1e-13));
  CHECK(karamata_sum_ratio(RegVarFn(Role::b, 1.0), 1000000) == doctest::Approx(1.0 + 1e-6).epsilon(1e-13));
  for (double beta : {0.5, 1.0, 2.0}) {
    double r = karamata_sum_ratio(RegVarFn(Role::b, beta), 1000000);
    CHECK(r >= 0.99);
    CHECK(r <= 1.01);
  }
  CHECK(std::fabs(karamata_sum_ratio(RegVarFn(Role::b, 0.5), 1000000) - 1.0) < 1e-3);
}

TEST_CASE("karamata ratio of log-corrected families approaches 1 slowly") {
  RegVarFn b(Role::b, 1.0, {1.0, 1.0, 0.0});
  double prev = 0.0;
  for (std::uint64_t m : {100ULL, 10000ULL, 1000000ULL}) {
    double r = karamata_sum_ratio(b, m);
    CHECK(std::fabs(r - 1.0) < std::fabs(prev - 1.0));
    prev = r;
  }
  // Euler-Maclaurin: ratio = 1 - 1/(2 log m) + O(1/log^2 m).
  CHECK(prev == doctest::Approx(1.0 - 1.0 / (2.0 * std::log(1e6))).epsilon(0.01));
}

TEST_CASE("potter_bound") {
  RegVarFn id(Role::b, 1.0);
  for (double x : {0.5, 3.0, 1e5}) {
    auto c = potter_bound(id, x, 2.0 * x, 0.05, 0.05);
    CHECK(c.holds);
    CHECK(c.ratio == doctest::Approx(2.0));
    CHECK(c.margin == doctest::Approx(1.05 * std::pow(2.0, 1.05) - 2.0));
  }
  RegVarFn xlog(Role::b, 1.0, {1.0, 1.0, 0.0});
  auto c = potter_bound(xlog, 1e3, 1e4, 0.1, 0.1);
  CHECK(c.holds);
  double ratio = 1e4 * std::log(kE + 1e4) / (1e3 * std::log(kE + 1e3));
  CHECK(c.ratio == doctest::Approx(ratio).epsilon(1e-14));
  CHECK(c.margin == doctest::Approx(1.1 * std::pow(10.0, 1.1) - ratio).epsilon(1e-13));
  RegVarFn k(Role::a, 0.0, {3.0, 0.0, 0.0});
  auto ck = potter_bound(k, 2.0, 1e6, 0.01, 0.01);
  CHECK(ck.holds);
  CHECK(ck.ratio == 1.0);
}

TEST_CASE("f_tilde for b(x) = x is log(1 + x)") {
  auto f = construct(ConstructedKind::f_tilde, RegVarFn(Role::b, 1.0));
  CHECK(f(kE - 1.0) == doctest::Approx(1.0).epsilon(1e-9));
  for (double x : {0.5, 10.0, 1e6})
    CHECK(f(x) == doctest::Approx(std::log1p(x)).epsilon(1e-9));
}

TEST_CASE("f_tilde ratio to b(log x) at e^30") {
  for (double beta : {0.5, 1.0, 2.0}) {
    RegVarFn b(Role::b, beta);
    auto f = construct(ConstructedKind::f_tilde, b);
    double x = std::exp(30.0);
    CAPTURE(beta);
    CHECK(std::fabs(f(x) / b(30.0) - 1.0) < 0.02);
  }
}

TEST_CASE("f_tilde with a plateau near 1 matches direct integration") {
  // beta = 2: h rises to its peak at log y = 1 and then decays, so the
  // running sup is flat at 2/e on [1, e].
  RegVarFn b(Role::b, 2.0);
  auto f = construct(ConstructedKind::f_tilde, b);
  double plateau = (2.0 / kE) * (kE - 1.0);
  double x = std::exp(5.0) - 1.0;
  double tail = 25.0 - 1.0;  // integral of 2v over [1, 5]
  CHECK(f(x) == doctest::Approx(plateau + tail).epsilon(1e-8));
  CHECK(f(kE - 1.0) == doctest::Approx(plateau).epsilon(1e-9));
}

TEST_CASE("g_tilde against quadrature oracle and half log-squared") {
  auto g = construct(ConstructedKind::g_tilde, RegVarFn(Role::b, 1.0));
  double x = std::exp(10.0);
  double oracle = trapezoid([](double w) { return std::log1p(std::exp(w)); }, 0.0, std::log1p(x - 1.0), 200000);
  CHECK(g(x - 1.0) == doctest::Approx(oracle).epsilon(1e-7));
  CHECK(std::fabs(g(x - 1.0) / (0.5 * 100.0) - 1.0) < 0.05);
}

TEST_CASE("phi tracks c(log x)") {
  RegVarFn b(Role::b, 1.0);
  auto phi = construct(ConstructedKind::phi, b);
  double x = std::exp(30.0);
  CHECK(std::fabs(phi(x) / derive_c(b)(30.0) - 1.0) < 0.02);
}

TEST_CASE("constructed grids are monotone and f_tilde, phi concave") {
  for (auto b : {RegVarFn(Role::b, 0.5), RegVarFn(Role::b, 1.0, {1.0, 1.0, 0.0}), RegVarFn(Role::b, 2.0, {1.0, 0.0, 1.0})}) {
    CAPTURE(b.describe());
    for (auto kind : {ConstructedKind::f_tilde, ConstructedKind::phi, ConstructedKind::g_tilde, ConstructedKind::psi}) {
      auto f = construct(kind, b, 1e-10, 40.0);
      auto g = f.grid();
      CAPTURE(to_string(kind));
      for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i].second >= g[i - 1].second);
      if (kind == ConstructedKind::f_tilde || kind == ConstructedKind::phi) {
        for (std::size_t i = 2; i < g.size(); ++i) {
          double s1 = (g[i - 1].second - g[i - 2].second) / (g[i - 1].first - g[i - 2].first);
          double s2 = (g[i].second - g[i - 1].second) / (g[i].first - g[i - 1].first);
          CHECK(s2 <= s1 * (1.0 + 1e-6) + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("psi vanishes on (-inf, 1] and is subadditive with the reported constant") {
  for (auto b : {RegVarFn(Role::b, 1.0), RegVarFn(Role::b, 0.5, {1.0, 2.0, 0.0}), RegVarFn(Role::b, 2.0, {1.0, 0.0, 1.0})}) {
    auto psi = construct(ConstructedKind::psi, b, 1e-10, 40.0);
    CHECK(psi(1.0) == 0.0);
    CHECK(psi(0.3) == 0.0);
    CHECK(psi(-2.0) == 0.0);
    double a = psi.subadditivity_constant();
    CHECK(a >= 1.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, std::log(1e6));
    for (int i = 0; i < 10000; ++i) {
      double x = std::exp(u(rng)), y = std::exp(u(rng));
      CHECK(psi(x * y) <= a * (psi(x) + psi(y)));
    }
    // psi(x) ~ c(log x).
    CHECK(psi(std::exp(30.0)) / derive_c(b)(30.0) == doctest::Approx(1.0));
  }
  // Pure powers: the sup of c(u+w)/(c(u)+c(w)) is 2^beta.
  auto psi = construct(ConstructedKind::psi, RegVarFn(Role::b, 1.0), 1e-10, 40.0);
  CHECK(psi.subadditivity_constant() == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("lambda_beta kind and at_log agree with direct evaluation") {
  RegVarFn b(Role::b, 1.5, {1.0, 1.0, 0.0});
  auto lam = construct(ConstructedKind::lambda_beta, b);
  CHECK(lam(7.0) == doctest::Approx(lambda_beta(b, 7.0)).epsilon(1e-14));
  CHECK(lam.at_log(std::log(7.0)) == doctest::Approx(lambda_beta(b, 7.0)).epsilon(1e-13));
  auto f = construct(ConstructedKind::f_tilde, b, 1e-10, 40.0);
  CHECK(f.at_log(std::log(123.0)) == doctest::Approx(f(123.0)).epsilon(1e-12));
  // Beyond the tabulated range the value is integrated on demand.
  CHECK(f.at_log(60.0) > f.at_log(40.0));
  auto g = construct(ConstructedKind::g_tilde, b, 1e-10, 40.0);
  CHECK(g.at_log(45.0) > g.at_log(39.0));
}
