// Acceptance checks: one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "brwlab/diagnostics.hpp"
#include "brwlab/gallery.hpp"
#include "brwlab/parallel.hpp"
#include "brwlab/perpetuity.hpp"
#include "brwlab/runner.hpp"
#include "brwlab/sizebias.hpp"
#include "brwlab/stats.hpp"
#include "brwlab/walkrenew.hpp"
#include "json.hpp"

using namespace brwlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

struct Check {
  int id;
  std::string title;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

BranchingModel det_binary() {
  return {1.0, DeterministicCount{2}, FixedPositions{{1.0, -1.0}}, Coupling::deterministic_fanout};
}
BranchingModel gw_geometric() { return {0.0, GeometricCount{1.0 / 3.0}, NoDisplacement{}, Coupling::independent}; }
BranchingModel poisson_normal() {
  return {1.0, PoissonCount{3.0}, NormalDisplacement{0.0, 1.0}, Coupling::independent};
}

fs::path work_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / "brwlab_acceptance" / name;
  fs::remove_all(p);
  return p;
}

Outcome ac1() {
  Simulator sim(gw_geometric());
  auto traces = parallel_map(10000, 1, [&](std::size_t i) {
    Engine rng = make_engine(2024, "ac1", i);
    auto t = run_martingale(sim, 10, rng);
    return t.stop == StopReason::extinct ? 0.0 : t.points.back().W;
  });
  auto ms = mean_se(traces);
  double dev = std::fabs(ms.mean - 1.0);
  return {dev < 3.0 * ms.se, "|mean(W_10) - 1| = " + fmt(dev) + " vs 3 SE = " + fmt(3.0 * ms.se)};
}

Outcome ac2() {
  // Offspring pgf f(s) = p / (1 - q s) with p = 1/3. Z_n given survival is
  // geometric on {1, 2, ...} with mean m^n / (1 - P{Z_n = 0}).
  const double p = 1.0 / 3.0, q = 1.0 - p, m = q / p;
  const int n = 15;
  double p0 = 0.0;
  for (int i = 0; i < n; ++i) p0 = p / (1.0 - q * p0);
  const double scale = std::pow(m, n);
  const double r = 1.0 - (1.0 - p0) / scale;
  auto surv_count = [&](double k) { return k < 1.0 ? 0.0 : 1.0 - std::pow(r, std::floor(k)); };
  auto cdf = [&](double w) { return w < 0.0 ? 0.0 : p0 + (1.0 - p0) * surv_count(w * scale + 1e-9); };
  auto cdf_left = [&](double w) {
    if (w <= 0.0) return 0.0;
    double k = std::ceil(w * scale - 1e-9) - 1.0;
    return p0 + (1.0 - p0) * surv_count(k);
  };
  Simulator sim(gw_geometric());
  auto est = estimate_W(sim, n, 100000, 2025, 1);
  std::vector<double> w;
  for (const auto& x : est.replicas) w.push_back(x.w_hat);
  double ks = ks_distance(w, cdf, cdf_left);
  auto limit = [](double x) { return x < 0 ? 0.0 : 0.5 + 0.5 * (1.0 - std::exp(-x / 2.0)); };
  auto limit_left = [](double x) { return x <= 0 ? 0.0 : 0.5 + 0.5 * (1.0 - std::exp(-x / 2.0)); };
  double ks_limit = ks_distance(w, limit, limit_left);
  return {ks < 0.02, "KS(W_15, exact law) = " + fmt(ks) + ", KS to the limit law = " + fmt(ks_limit) +
                         ", P{Z_15 = 0} = " + fmt(p0, 10)};
}

Outcome ac3() {
  auto r = [](double y) { return y / (1.0 + y); };
  bool ok = true;
  std::ostringstream d;
  struct M {
    const char* name;
    BranchingModel model;
  };
  for (const auto& [name, model] : {M{"det_binary", det_binary()}, M{"gw_geometric", gw_geometric()},
                                    M{"brw_poisson_normal", poisson_normal()}}) {
    SpineEstimator est(model);
    d << name << ":";
    for (std::size_t n = 1; n <= 3; ++n) {
      auto c = product_identity_check(est, r, n, 40000, stream_seed(3, name, n), 1);
      bool pass = std::fabs(c.z) <= 3.0;
      if (c.left.exact && c.right.exact) {
        double gap = std::fabs(c.left.value - c.right.value) / std::max(1.0, std::fabs(c.right.value));
        pass = gap <= 1e-12;
        d << " n" << n << " gap " << fmt(gap, 3);
      } else {
        d << " n" << n << " z " << fmt(c.z, 3);
      }
      ok = ok && pass;
    }
    d << "; ";
  }
  return {ok, d.str()};
}

Outcome ac4() {
  bool ok = true;
  std::ostringstream d;
  for (double beta : {0.5, 1.0, 2.0}) {
    double ratio = karamata_sum_ratio(RegVarFn(Role::b, beta), 1000000);
    ok = ok && ratio >= 0.99 && ratio <= 1.01;
    d << "beta " << beta << ": " << fmt(ratio, 8) << "  ";
  }
  return {ok, d.str()};
}

const RenewalTable& normal_table() {
  static const RenewalTable t = RenewalTable::build(WalkSpec{NormalStep{1.0, 1.0}}, RegVarFn(Role::b, 1.0));
  return t;
}

Outcome ac5() {
  const auto& t = normal_table();
  const double L = 25.0;
  auto km = km_functions(t, L);
  // mu = 1 and b(y) = y, so both limits equal 1.
  double k_ratio = km.K / (std::exp(L) * L);
  double m_ratio = km.M * std::exp(L) / L;
  bool ok = std::fabs(k_ratio - 1.0) <= 0.15 && std::fabs(m_ratio - 1.0) <= 0.15;
  return {ok, "K(x)/(x b(log x)) = " + fmt(k_ratio) + ", x M(x)/b(log x) = " + fmt(m_ratio) + " at x = e^25"};
}

Outcome ac6() {
  const auto& t = normal_table();
  const WalkSpec walk{NormalStep{1.0, 1.0}};
  const RegVarFn b(Role::b, 1.0);
  const double L = 20.0;
  double inc = dehaan_increment(t, L, std::exp(1.0));
  double h1 = dehaan_increment(t, L, 1.0);
  double v0 = renewal_V_log(walk, b, L).value;
  double v1 = renewal_V_log(walk, b, L + 1.0).value;
  double v2 = renewal_V_log(walk, b, L + 2.0).value;
  double tele = std::fabs((v2 - v0) - ((v2 - v1) + (v1 - v0))) / std::fabs(v2 - v0);
  // The increment uses the same direct V.
  double direct = (v1 - v0) / L;
  bool ok = std::fabs(inc - 1.0) <= 0.1 && h1 == 0.0 && tele <= 1e-12;
  return {ok, "increment " + fmt(inc) + " (direct " + fmt(direct) + ") at x = e^20, h = 1 gives " + fmt(h1) +
                  ", telescoping error " + fmt(tele, 3)};
}

Outcome ac7() {
  // Size-biased atoms of the +-1 model: Z = e^{+-1} / (e + 1/e) with weights Z.
  const double e = std::exp(1.0), zp = e / (e + 1.0 / e), zm = (1.0 / e) / (e + 1.0 / e);
  const double mu_oracle = -(zp * std::log(zp) + zm * std::log(zm));
  SpineEstimator est(det_binary());
  double mu = drift_mu(est, 100000, 7).value;
  const double limit = 1.0 / (2.0 * mu_oracle * mu_oracle);
  std::vector<double> xs{12.0};
  auto r = renewal_limit_Q(det_binary(), RegVarFn(Role::b, 1.0), xs, mu, 1, 7);
  const auto& p = r.points.at(0);
  double dev = std::fabs(p.q_ratio / limit - 1.0);
  double gap = std::fabs(p.qhat_ratio / p.q_ratio - 1.0);
  return {dev <= 0.2 && gap < 0.1, "mu = " + fmt(mu) + " (oracle " + fmt(mu_oracle) + "), limit 1/(2 mu^2) = " +
                                       fmt(limit) + ", Q(12)/(12 b(12)) = " + fmt(p.q_ratio) + " (deviation " +
                                       fmt(dev, 4) + "), |Qhat/Q - 1| = " + fmt(gap, 4)};
}

Outcome ac8() {
  const PerpetuitySpec specs[] = {{UniformM{0.5, 1.5}, ConstQ{1.0}}, {UniformM{0.2, 1.6}, CoupledQ{1.0, -0.5, 1.0}}};
  double worst = 0.0;
  std::size_t blocks = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    Engine rng = make_engine(8, "ac8", i);
    auto path = sample_path(specs[i % 2], 1000, rng);
    auto epochs = all_ladder_epochs(log_abs_products(path.m));
    auto d = block_decompose(path, epochs);
    blocks += d.blocks.size();
    worst = std::max(worst, d.rel_error());
  }
  return {worst <= 1e-12, "max relative error " + fmt(worst, 3) + " over 100 paths, " + std::to_string(blocks) +
                              " blocks"};
}

Outcome ac9() {
  const PerpetuitySpec spec{UniformM{0.0, 1.0}, ConstQ{1.0}};
  // Z = U Z' + 1: E Z = 1 / (1 - E U), E Z^2 = (1 + 2 E U E Z) / (1 - E U^2).
  const double ez = 1.0 / (1.0 - 0.5), ez2 = (1.0 + 2.0 * 0.5 * ez) / (1.0 - 1.0 / 3.0);
  const double var_oracle = ez2 - ez * ez;
  const std::size_t R = 100000;
  auto z = sample_Z_many(spec, R, 9, {}, 1);
  std::vector<double> v;
  for (const auto& s : z) v.push_back(s.value);
  auto ms = mean_se(v);
  double var = variance(v), vse = variance_se(v);
  auto unrolled = parallel_map(R, 1, [&](std::size_t i) {
    Engine rng = make_engine(9, "ac9_unroll", i);
    double zp = sample_Z(spec, rng).value;
    return uniform01(rng) * zp + 1.0;
  });
  double ks = ks_two_sample(v, unrolled);
  bool ok = std::fabs(ms.mean - ez) <= 3.0 * ms.se && std::fabs(var - var_oracle) <= 3.0 * vse && ks < 0.02;
  return {ok, "mean " + fmt(ms.mean) + " (oracle " + fmt(ez) + ", SE " + fmt(ms.se, 3) + "), variance " + fmt(var) +
                  " (oracle " + fmt(var_oracle) + ", SE " + fmt(vse, 3) + "), unroll KS " + fmt(ks, 4)};
}

Outcome ac10() {
  // E exp(k (E - 2)) = e^{-2k} / (1 - k) = 1 on (0, 1).
  double lo = 0.1, hi = 0.99;
  auto g = [](double k) { return (1.0 - k) * std::exp(2.0 * k) - 1.0; };
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  const double kappa = 0.5 * (lo + hi);
  std::vector<double> xs{1.0};
  auto run = passage_functionals(WalkSpec{ShiftedExpStep{1.0, 2.0}}, xs, 100000, 10);
  std::vector<double> m;
  for (const auto& s : run.samples) m.push_back(s.sup);
  double fit = exp_tail_rate(m, 2.0, 6.0);
  double rel = std::fabs(fit / kappa - 1.0);
  return {rel <= 0.1, "fitted slope " + fmt(fit) + " vs kappa " + fmt(kappa) + " (relative " + fmt(rel, 3) + ")"};
}

Outcome ac11() {
  bool ok = true;
  std::ostringstream d;
  std::size_t models = 0, divergent = 0;
  RunOptions opt;
  opt.out = work_dir("ac11");
  for (const auto& g : gallery()) {
    auto s = parse_scenario(g.text, g.name);
    if (s.walk && !(step_mean(s.walk->step) < 0.0)) continue;
    auto r = run_experiment(s, Experiment::moments, opt);
    auto j = nlohmann::json::parse(r.summary);
    ++models;
    divergent += s.params.expect_divergent;
    ok = ok && r.pass();
    d << g.name << (r.pass() ? " agree" : " DISAGREE") << " [";
    bool first = true;
    for (const auto& [side, v] : j["results"]["sides"].items()) {
      d << (first ? "" : " ") << side << " " << (v["slope"].is_number() ? fmt(v["slope"].get<double>(), 3) : v["slope"].dump());
      first = false;
    }
    d << "]; ";
  }
  ok = ok && divergent >= 2;
  d << models << " models, " << divergent << " divergent";
  return {ok, d.str()};
}

Outcome ac12() {
  SeriesOptions opt;
  opt.m_max = 30;
  opt.depth = 60;
  RegVarFn one(Role::a, 0.0);
  auto det = series_trace(det_binary(), one, 100, 12, opt);
  double worst = 0.0;
  for (const auto& r : det.replicas)
    for (double v : r.T) worst = std::max(worst, std::fabs(v));
  auto geo = series_trace(gw_geometric(), one, 10000, 12, opt);
  double frac = geo.stabilizing_fraction();
  bool ok = worst < 1e-12 && frac >= 0.95;
  return {ok, "deterministic max |T_m| = " + fmt(worst, 3) + "; geometric stabilizing on " + fmt(100.0 * frac, 4) +
                  "% of " + std::to_string(geo.surviving) + " surviving replicas (proxy error " +
                  fmt(geo.proxy_error, 3) + ", median oscillation " + fmt(median_oscillation(geo), 3) + ")"};
}

Outcome ac13() {
  bool ok = true;
  std::ostringstream d;
  std::size_t compared = 0;
  for (const auto& g : gallery()) {
    auto s = parse_scenario(g.text, g.name);
    RunOptions one, four;
    one.out = work_dir("ac13_w1");
    four.out = work_dir("ac13_w4");
    four.workers = 4;
    auto a = run_experiment(s, s.experiment, one);
    auto b = run_experiment(s, s.experiment, four);
    bool same = a.complete && b.complete && a.files.size() == b.files.size();
    for (std::size_t i = 0; same && i < a.files.size(); ++i) {
      if (a.files[i].path.ends_with(".csv")) {
        same = a.files[i].path == b.files[i].path && a.files[i].sha256 == b.files[i].sha256;
        ++compared;
      }
    }
    ok = ok && same;
    if (!same) d << g.name << " differs; ";
  }
  d << compared << " CSV files identical across workers 1 and 4";
  return {ok, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  int only = 0;
  app.add_option("--only", only, "Run a single criterion")->check(CLI::Range(1, 13));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Check> checks{
      {1, "martingale mean", 30, ac1},
      {2, "GW limit law", 120, ac2},
      {3, "size-bias identity", 60, ac3},
      {4, "Karamata sum ratio", 5, ac4},
      {5, "K and M asymptotics", 120, ac5},
      {6, "renewal increment", 120, ac6},
      {7, "renewal limit of Q", 180, ac7},
      {8, "block identity", 10, ac8},
      {9, "perpetuity fixed point", 60, ac9},
      {10, "Cramer tail", 120, ac10},
      {11, "moment-equivalence polarity", 600, ac11},
      {12, "series diagnostic", 300, ac12},
      {13, "determinism", 1e9, ac13},
  };
  int failures = 0;
  for (const auto& c : checks) {
    if (only && c.id != only) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = dt <= c.budget_s;
    bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("AC%-2d %s  %s: %s [%.1f s%s]\n", c.id, pass ? "PASS" : "FAIL", c.title.c_str(), o.detail.c_str(), dt,
                in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
