#include "brwlab/runner.hpp"

#include <algorithm>
#include <cmath>

#include "brwlab/diagnostics.hpp"
#include "brwlab/error.hpp"
#include "brwlab/parallel.hpp"
#include "brwlab/sizebias.hpp"
#include "brwlab/stats.hpp"
#include "json.hpp"

namespace brwlab {

namespace {

using json = nlohmann::ordered_json;

struct Report {
  json results = json::object();
  std::vector<Verdict> verdicts;

  // pass when value < threshold
  void below(const std::string& name, double value, double threshold) {
    verdicts.push_back({name, value < threshold, value, threshold});
  }
  void at_least(const std::string& name, double value, double threshold) {
    verdicts.push_back({name, value >= threshold, value, threshold});
  }
  void flag(const std::string& name, bool ok) { verdicts.push_back({name, ok, ok ? 1.0 : 0.0, 1.0}); }
};

// JSON numbers cannot hold inf or nan.
json num(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

std::string x_label(double x) { return "x=" + format_number(x); }

void estimate_row(Csv& csv, const std::string& name, double value, double se, std::uint64_t replicas,
                  std::uint64_t seed) {
  csv.cell(std::string_view(name)).cell(value).cell(se).cell(replicas).cell(seed);
  csv.end_row();
}

Csv estimate_csv() { return Csv({"estimator", "value", "SE", "replicas", "seed"}); }

void diagnostic_rows(Csv& csv, const MomentDiagnostic& d, const std::string& side) {
  for (const auto& p : d.trace) {
    csv.cell(std::string_view(side)).cell(p.level).cell(p.running_mean).cell(d.slope);
    csv.end_row();
  }
}

json diagnostic_json(const MomentDiagnostic& d) {
  return {{"label", d.label},  {"estimate", num(d.estimate)}, {"slope", num(d.slope)},
          {"threshold", d.threshold}, {"verdict", d.verdict()},  {"samples", d.samples}};
}

RegVarFn a_or_default(const Scenario& s) { return s.a ? *s.a : RegVarFn(Role::a, 0.0); }
RegVarFn b_or_default(const Scenario& s) { return s.b ? *s.b : RegVarFn(Role::b, 1.0); }

void run_martingale_exp(const Scenario& s, unsigned w, ArtifactDir& out, Report& rep) {
  Simulator sim(*s.model, s.sim);
  const std::size_t n = s.params.n_max;
  auto traces = parallel_map(s.replicas, w, [&](std::size_t i) {
    Engine rng = make_engine(s.seed, "martingale", i);
    return run_martingale(sim, n, rng);
  });
  Csv csv({"replica", "n", "W_n", "count", "flag"});
  std::vector<double> wn;
  std::size_t cap = 0, extinct = 0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto& t = traces[i];
    for (const auto& p : t.points) {
      csv.cell(static_cast<std::uint64_t>(i)).cell(static_cast<std::uint64_t>(p.n)).cell(p.W).cell(p.count);
      csv.cell(to_string(t.stop));
      csv.end_row();
    }
    if (t.stop == StopReason::cap_exceeded) {
      ++cap;
    } else if (t.stop == StopReason::extinct) {
      ++extinct;
      wn.push_back(0.0);
    } else {
      wn.push_back(t.points.back().W);
    }
  }
  out.write("trace.csv", csv.str());
  auto ms = mean_se(wn);
  Csv est = estimate_csv();
  estimate_row(est, "mean_W_" + std::to_string(n), ms.mean, ms.se, wn.size(), s.seed);
  out.write("estimates.csv", est.str());
  rep.results = {{"n", n},           {"mean_W_n", num(ms.mean)}, {"se", num(ms.se)},
                 {"extinct", extinct}, {"cap_exceeded", cap},    {"m", sim.m()}};
  double tol = ms.se > 0.0 ? s.tol.sigma * ms.se : 1e-12;
  rep.below("abs(mean_W_n - 1)", std::fabs(ms.mean - 1.0), tol);
}

void run_series_exp(const Scenario& s, unsigned w, ArtifactDir& out, Report& rep) {
  SeriesOptions opt;
  opt.m_max = s.params.m_max;
  opt.depth = s.params.depth;
  opt.relative_floor = s.tol.relative_floor;
  opt.workers = w;
  opt.sim = s.sim;
  auto t = series_trace(*s.model, *s.a, s.replicas, s.seed, opt);
  Csv traces({"replica", "m", "T_m"});
  Csv verdicts({"replica", "survived", "W_hat", "oscillation", "threshold", "stabilizing", "flag"});
  for (std::size_t i = 0; i < t.replicas.size(); ++i) {
    const auto& r = t.replicas[i];
    for (std::size_t m = 1; m <= r.T.size(); ++m) {
      traces.cell(static_cast<std::uint64_t>(i)).cell(static_cast<std::uint64_t>(m)).cell(r.T[m - 1]);
      traces.end_row();
    }
    verdicts.cell(static_cast<std::uint64_t>(i)).cell(r.survived).cell(r.w_hat).cell(r.oscillation);
    verdicts.cell(r.threshold).cell(r.stabilizing).cell(to_string(r.stop));
    verdicts.end_row();
  }
  out.write("traces.csv", traces.str());
  out.write("verdicts.csv", verdicts.str());
  rep.results = {{"m_max", opt.m_max},
                 {"proxy_depth", opt.depth},
                 {"proxy_error", num(t.proxy_error)},
                 {"a_sum", num(t.a_sum)},
                 {"surviving", t.surviving},
                 {"stabilizing", t.stabilizing},
                 {"median_oscillation", num(median_oscillation(t))},
                 {"rule", "oscillation < max(proxy_error * a_sum, relative_floor * |T_m_max|)"},
                 {"relative_floor", opt.relative_floor}};
  rep.at_least("stabilizing_fraction", t.stabilizing_fraction(), s.tol.stabilizing);
}

void run_renewal_exp(const Scenario& s, unsigned w, ArtifactDir& out, Report& rep) {
  SpineEstimator est(*s.model, s.sim, s.non_arithmetic);
  auto mu = drift_mu(est, s.params.mu_replicas, s.seed, w);
  RenewalLimitOptions opt;
  opt.workers = w;
  opt.sim = s.sim;
  auto r = renewal_limit_Q(*s.model, *s.b, s.params.xs, mu.value, s.replicas, s.seed, opt);
  Csv csv({"x", "replica", "ratio", "ratio_hat", "W_hat", "predicted", "certified"});
  for (const auto& p : r.points) {
    csv.cell(p.x).cell(static_cast<std::uint64_t>(p.replica)).cell(p.q_ratio).cell(p.qhat_ratio).cell(p.w_hat);
    csv.cell(p.predicted).cell(p.certified);
    csv.end_row();
  }
  out.write("renewal.csv", csv.str());
  auto sum = summarize(r);
  std::sort(sum.begin(), sum.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
  json per = json::array();
  std::size_t uncertified = 0;
  for (const auto& p : r.points) uncertified += !p.certified;
  for (const auto& q : sum) {
    per.push_back({{"x", q.x},
                   {"median_rel_dev", num(q.median_rel_dev)},
                   {"median_hat_gap", num(q.median_hat_gap)},
                   {"median_ratio_over_W", num(q.median_ratio_over_w)},
                   {"iqr_ratio_over_W", num(q.iqr_ratio_over_w)},
                   {"replicas", q.n}});
    rep.below("rel_dev " + x_label(q.x), q.median_rel_dev, s.tol.renewal_band);
    rep.below("hat_gap " + x_label(q.x), q.median_hat_gap, s.tol.hat_gap);
  }
  for (std::size_t i = 1; i < sum.size(); ++i)
    rep.flag("rel_dev non-increasing " + x_label(sum[i - 1].x) + ".." + x_label(sum[i].x),
             sum[i].median_rel_dev <= sum[i - 1].median_rel_dev);
  rep.results = {{"mu", mu.value},         {"mu_se", mu.se},           {"mu_exact", mu.exact},
                 {"depth", r.depth},       {"surviving", r.surviving}, {"uncertified_points", uncertified},
                 {"per_x", per}};
}

void run_sizebias_exp(const Scenario& s, unsigned w, ArtifactDir& out, Report& rep) {
  SpineEstimator est(*s.model, s.sim, s.non_arithmetic);
  auto mu = drift_mu(est, s.params.mu_replicas, s.seed, w);
  Csv csv = estimate_csv();
  estimate_row(csv, "mu", mu.value, mu.se, mu.exact ? 0 : s.params.mu_replicas, s.seed);
  auto r = [](double y) { return y / (1.0 + y); };
  json ids = json::array();
  for (std::size_t n : s.params.identity_n) {
    std::uint64_t seed = stream_seed(s.seed, "identity", n);
    auto c = product_identity_check(est, r, n, s.replicas, seed, w);
    estimate_row(csv, "identity_left_n" + std::to_string(n), c.left.value, c.left.se, c.left.replicas, seed);
    estimate_row(csv, "identity_right_n" + std::to_string(n), c.right.value, c.right.se, c.right.replicas, seed);
    ids.push_back({{"n", n}, {"left", c.left.value}, {"right", c.right.value}, {"z", num(c.z)}});
    rep.below("abs(z) n=" + std::to_string(n), std::fabs(c.z), s.tol.sigma + 1e-12);
  }
  out.write("estimates.csv", csv.str());
  rep.results = {{"mode", std::string(to_string(est.mode()))},
                 {"mu", mu.value},
                 {"mu_se", mu.se},
                 {"identity_r", "y / (1 + y)"},
                 {"identity", ids}};
}

// E M^k for iid laws with a closed form.
std::optional<double> m_moment(const MLaw& m, int k) {
  if (auto c = std::get_if<ConstM>(&m)) return std::pow(c->value, k);
  if (auto e = std::get_if<ExpM>(&m)) return e->rate / (e->rate + k);
  if (auto u = std::get_if<UniformM>(&m))
    return (std::pow(u->hi, k + 1) - std::pow(u->lo, k + 1)) / ((k + 1) * (u->hi - u->lo));
  return std::nullopt;
}

void run_perpetuity_exp(const Scenario& s, unsigned w, ArtifactDir& out, Report& rep) {
  const PerpetuitySpec& spec = *s.perpetuity;
  auto z = sample_Z_many(spec, s.replicas, s.seed, {}, w);
  std::vector<double> v;
  v.reserve(z.size());
  for (const auto& x : z) v.push_back(x.value);
  auto ms = mean_se(v);
  double var = variance(v), var_se = variance_se(v);
  Csv csv = estimate_csv();
  estimate_row(csv, "mean_Z", ms.mean, ms.se, v.size(), s.seed);
  estimate_row(csv, "var_Z", var, var_se, v.size(), s.seed);

  // Oracle moments from Z = M Z' + Q with independent Z' and constant Q.
  auto cq = std::get_if<ConstQ>(&spec.q);
  auto m1 = m_moment(spec.m, 1), m2 = m_moment(spec.m, 2);
  if (cq && m1 && m2 && *m2 < 1.0) {
    double q = cq->value;
    double ez = q / (1.0 - *m1);
    double ez2 = (q * q + 2.0 * q * *m1 * ez) / (1.0 - *m2);
    rep.results["oracle_mean"] = ez;
    rep.results["oracle_variance"] = ez2 - ez * ez;
    rep.below("abs(mean - oracle) / SE", std::fabs(ms.mean - ez) / ms.se, s.tol.sigma);
    rep.below("abs(var - oracle) / SE", std::fabs(var - (ez2 - ez * ez)) / var_se, s.tol.sigma);
  }

  if (!std::holds_alternative<CycleM>(spec.m)) {
    auto unrolled = parallel_map(s.replicas, w, [&](std::size_t i) {
      Engine rng = make_engine(s.seed, "unroll", i);
      auto zp = sample_Z(spec, rng);
      auto mq = sample_path(spec, 1, rng);
      return mq.m[0] * zp.value + mq.q[0];
    });
    double ks = ks_two_sample(v, unrolled);
    estimate_row(csv, "ks_one_step_unroll", ks, 0.0, v.size(), s.seed);
    rep.below("ks_one_step_unroll", ks, s.tol.ks);
  }

  double worst = 0.0;
  std::size_t blocks = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    Engine rng = make_engine(s.seed, "blocks", i);
    auto path = sample_path(spec, 1000, rng);
    auto epochs = all_ladder_epochs(log_abs_products(path.m));
    if (epochs.empty()) continue;
    auto d = block_decompose(path, epochs);
    blocks += d.blocks.size();
    worst = std::max(worst, d.rel_error());
  }
  estimate_row(csv, "block_identity_max_rel_error", worst, 0.0, 100, s.seed);
  rep.below("block_identity_max_rel_error", worst, 1e-12);
  out.write("estimates.csv", csv.str());

  Csv qs({"p", "quantile"});
  for (int k = 1; k < 100; ++k) {
    double p = k / 100.0;
    qs.cell(p).cell(quantile(v, p));
    qs.end_row();
  }
  out.write("quantiles.csv", qs.str());
  std::size_t unbounded = 0, completions = 0;
  for (const auto& x : z) {
    unbounded += !x.bounded;
    completions += x.completions;
  }
  rep.results["spec"] = describe(spec);
  rep.results["mean_Z"] = num(ms.mean);
  rep.results["var_Z"] = num(var);
  rep.results["unbounded_remainders"] = unbounded;
  rep.results["heavy_completions"] = completions;
  rep.results["ladder_blocks"] = blocks;
}

void run_walk_exp(const Scenario& s, unsigned w, ArtifactDir& out, Report& rep) {
  const WalkSpec& walk = *s.walk;
  const double mu = step_mean(walk.step);
  rep.results["step"] = describe(walk.step);
  rep.results["mu"] = num(mu);
  if (mu > 0.0) {
    RegVarFn b = b_or_default(s);
    RenewalOptions ro;
    ro.workers = w;
    auto t = RenewalTable::build(walk, b, ro);
    Csv csv({"log_x", "V", "K", "M", "N", "tail_bound"});
    for (const auto& r : t.exported()) {
      csv.cell(r.log_x).cell(r.V).cell(r.K).cell(r.M).cell(r.terms).cell(r.tail_bound);
      csv.end_row();
    }
    out.write("renewal_table.csv", csv.str());
    const double target = std::pow(mu, -b.exponent() - 1.0);
    const double L = s.params.log_x_km;
    auto km = km_functions(t, L);
    double k_ratio = km.K / (std::exp(L) * b(L)) / target;
    double m_ratio = km.M * std::exp(L) / b(L) / target;
    double haan = dehaan_increment(t, s.params.log_x_haan, std::exp(1.0));
    double haan1 = dehaan_increment(t, s.params.log_x_haan, 1.0);
    Csv est = estimate_csv();
    estimate_row(est, "K_ratio", k_ratio, 0.0, 0, s.seed);
    estimate_row(est, "M_ratio", m_ratio, 0.0, 0, s.seed);
    estimate_row(est, "haan_increment", haan, 0.0, 0, s.seed);
    out.write("estimates.csv", est.str());
    rep.results["limit"] = target;
    rep.results["log_x_km"] = L;
    rep.results["K_ratio"] = k_ratio;
    rep.results["M_ratio"] = m_ratio;
    rep.results["M_tail"] = t.m_tail();
    rep.results["log_x_haan"] = s.params.log_x_haan;
    rep.results["haan_increment"] = haan;
    rep.below("abs(K_ratio - 1)", std::fabs(k_ratio - 1.0), s.tol.km_band);
    rep.below("abs(M_ratio - 1)", std::fabs(m_ratio - 1.0), s.tol.km_band);
    rep.below("abs(haan_increment - 1)", std::fabs(haan - 1.0), s.tol.haan_band);
    rep.flag("haan_increment h=1 is 0", haan1 == 0.0);
    return;
  }
  if (!(mu < 0.0)) throw DomainError("walk experiment needs a step with non-zero mean");
  PassageOptions po;
  po.workers = w;
  std::vector<double> xs{s.params.ladder_x};
  auto run = passage_functionals(walk, xs, s.replicas, s.seed, po);
  std::vector<double> sup;
  sup.reserve(run.samples.size());
  for (const auto& p : run.samples) sup.push_back(p.sup);
  std::vector<double> sorted = sup;
  std::sort(sorted.begin(), sorted.end());
  Csv tail({"t", "survival"});
  for (double t = 0.0; t <= s.params.tail_hi + 2.0 + 1e-12; t += 0.25) {
    auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t);
    tail.cell(t).cell(static_cast<double>(above) / static_cast<double>(sorted.size()));
    tail.end_row();
  }
  out.write("tail.csv", tail.str());
  double fit = exp_tail_rate(sup, s.params.tail_lo, s.params.tail_hi);
  auto root = cramer_root(walk.step);
  Csv est = estimate_csv();
  estimate_row(est, "kappa_fit", fit, 0.0, sup.size(), s.seed);
  if (root) estimate_row(est, "kappa_root", *root, 0.0, 0, s.seed);
  out.write("estimates.csv", est.str());
  rep.results["kappa_fit"] = num(fit);
  rep.results["kappa_root"] = root ? num(*root) : json("none");
  rep.results["window"] = num(run.window);
  rep.results["bias_bound"] = num(run.bias_bound);
  rep.results["bias_certified"] = run.bias_certified;
  rep.results["horizon_hits"] = run.horizon_hits;
  if (root && std::isfinite(*root)) rep.below("abs(kappa_fit / kappa - 1)", std::fabs(fit / *root - 1.0), s.tol.kappa_band);
}

void run_moments_exp(const Scenario& s, unsigned w, ArtifactDir& out, Report& rep) {
  TruncationOptions topt;
  topt.threshold = s.tol.slope;
  const std::size_t R = s.params.moment_replicas ? s.params.moment_replicas : s.replicas;
  Csv csv({"side", "truncation_level", "running_mean", "slope"});
  json sides = json::object();
  bool agree = false, primary = false;
  if (s.model) {
    auto me = moment_equivalence(*s.model, a_or_default(s), R, s.seed, s.params.moment_depth, w, s.sim, topt);
    diagnostic_rows(csv, me.w_side, "W");
    diagnostic_rows(csv, me.w1_side, "W1");
    sides["W"] = diagnostic_json(me.w_side);
    sides["W1"] = diagnostic_json(me.w1_side);
    rep.results["pair"] = "brw";
    rep.results["proxy_depth"] = s.params.moment_depth;
    rep.results["cap_hits"] = me.cap_hits;
    agree = me.agree();
    primary = me.w_side.diverging;
  } else if (s.perpetuity) {
    auto pm = perpetuity_moments(*s.perpetuity, b_or_default(s), R, s.seed, {}, w, topt);
    diagnostic_rows(csv, pm.z_side, "Z");
    diagnostic_rows(csv, pm.m_side, "M");
    diagnostic_rows(csv, pm.q_side, "Q");
    sides["Z"] = diagnostic_json(pm.z_side);
    sides["M"] = diagnostic_json(pm.m_side);
    sides["Q"] = diagnostic_json(pm.q_side);
    rep.results["pair"] = "perpetuity";
    agree = pm.consistent();
    primary = pm.z_side.diverging;
  } else {
    const WalkSpec& walk = *s.walk;
    if (!(step_mean(walk.step) < 0.0)) throw DomainError("walk moment pair needs a negative-drift step");
    auto id = [](double t) { return t; };
    PassageOptions po;
    po.workers = w;
    auto lm = ladder_moment_pair(walk, s.params.ladder_x, id, id, id, R, s.seed, po, topt);
    diagnostic_rows(csv, lm.m_inf, "M_inf");
    diagnostic_rows(csv, lm.sup_before, "sup_before_tau");
    diagnostic_rows(csv, lm.step, "step");
    sides["M_inf"] = diagnostic_json(lm.m_inf);
    sides["sup_before_tau"] = diagnostic_json(lm.sup_before);
    sides["step"] = diagnostic_json(lm.step);
    rep.results["pair"] = "walk";
    agree = lm.m_inf.diverging == lm.step.diverging && lm.sup_before.diverging == lm.step.diverging;
    primary = lm.m_inf.diverging;
  }
  out.write("diagnostics.csv", csv.str());
  rep.results["sides"] = sides;
  rep.results["expect_divergent"] = s.params.expect_divergent;
  rep.flag("verdicts agree", agree);
  rep.flag("polarity matches expectation", primary == s.params.expect_divergent);
}

void run_regvar_exp(const Scenario& s, unsigned, ArtifactDir& out, Report& rep) {
  std::vector<RegVarFn> fs;
  for (const auto& f : s.params.families) fs.push_back(parse_regvar(f));
  if (s.a) fs.push_back(*s.a);
  if (s.b) fs.push_back(*s.b);
  Csv csv({"family", "m", "ratio"});
  json rows = json::array();
  for (const auto& f : fs) {
    double r = karamata_sum_ratio(f, s.params.m);
    csv.cell(std::string_view(f.describe())).cell(s.params.m).cell(r);
    csv.end_row();
    rows.push_back({{"family", f.describe()}, {"m", s.params.m}, {"ratio", num(r)}});
    rep.below("abs(ratio - 1) " + f.describe(), std::fabs(r - 1.0), s.tol.karamata_band + 1e-15);
  }
  out.write("karamata.csv", csv.str());
  rep.results["karamata"] = rows;
}

}  // namespace

bool RunResult::pass() const {
  if (!complete) return false;
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

RunResult run_experiment(Scenario s, Experiment e, const RunOptions& opt) {
  if (opt.seed) s.seed = *opt.seed;
  if (opt.replicas) {
    if (*opt.replicas < 1) throw ConfigError("replicas must be >= 1");
    s.replicas = *opt.replicas;
  }
  if (s.walk) s.walk->seed = s.seed;
  check_runnable(s, e);
  const unsigned w = resolve_workers(opt.workers);

  RunResult res;
  res.dir = opt.out / s.name / std::string(to_string(e));
  ArtifactDir out(res.dir);
  Report rep;
  try {
    switch (e) {
      case Experiment::martingale:
        run_martingale_exp(s, w, out, rep);
        break;
      case Experiment::series:
        run_series_exp(s, w, out, rep);
        break;
      case Experiment::renewal:
        run_renewal_exp(s, w, out, rep);
        break;
      case Experiment::sizebias:
        run_sizebias_exp(s, w, out, rep);
        break;
      case Experiment::perpetuity:
        run_perpetuity_exp(s, w, out, rep);
        break;
      case Experiment::walk:
        run_walk_exp(s, w, out, rep);
        break;
      case Experiment::moments:
        run_moments_exp(s, w, out, rep);
        break;
      case Experiment::regvar_check:
        run_regvar_exp(s, w, out, rep);
        break;
    }
    res.complete = true;
  } catch (const std::exception& ex) {
    res.error = ex.what();
  }

  json summary;
  summary["scenario"] = s.name;
  summary["experiment"] = std::string(to_string(e));
  summary["seed"] = s.seed;
  summary["replicas"] = s.replicas;
  summary["status"] = res.complete ? "complete" : "partial";
  if (!res.complete) summary["error"] = res.error;
  summary["results"] = rep.results;
  json vs = json::array();
  for (const auto& v : rep.verdicts)
    vs.push_back({{"name", v.name}, {"pass", v.pass}, {"value", num(v.value)}, {"threshold", num(v.threshold)}});
  summary["verdicts"] = vs;
  res.verdicts = rep.verdicts;
  summary["pass"] = res.pass();
  summary["config"] = json::parse(dump_scenario(s));
  res.summary = summary.dump(2) + "\n";
  out.write("summary.json", res.summary);
  out.write_manifest(s.name, std::string(to_string(e)), res.complete, res.error);
  res.files = out.files();
  return res;
}

}  // namespace brwlab
