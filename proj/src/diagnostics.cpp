#include "brwlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "brwlab/error.hpp"
#include "brwlab/numeric.hpp"
#include "brwlab/parallel.hpp"
#include "brwlab/stats.hpp"

namespace brwlab {

namespace {

double median(std::vector<double> v) { return v.empty() ? 0.0 : quantile(std::move(v), 0.5); }

// a(log+ w) with a(0) taken as the limit factor 0 inside W log+W a(log+W).
double log_plus(double w) { return w > 1.0 ? std::log(w) : 0.0; }

}  // namespace

SeriesTrace series_trace(const BranchingModel& model, const RegVarFn& a, std::size_t replicas, std::uint64_t seed,
                         const SeriesOptions& opt) {
  if (opt.m_max < 2) throw DomainError("series_trace needs m_max >= 2");
  if (opt.depth < 2 * opt.m_max) throw DomainError("proxy depth must be at least 2 m_max");
  Simulator sim(model, opt.sim);
  struct Path {
    std::vector<double> W;
    StopReason stop;
  };
  auto paths = parallel_map(replicas, opt.workers, [&](std::size_t i) {
    Engine rng = make_engine(seed, "series", i);
    auto tr = run_martingale(sim, opt.depth, rng);
    Path p{{}, tr.stop};
    for (const auto& pt : tr.points) p.W.push_back(pt.W);
    // Extinct paths stay at zero.
    if (tr.stop == StopReason::extinct) p.W.resize(opt.depth + 1, 0.0);
    return p;
  });

  SeriesTrace out;
  const std::size_t half = opt.depth / 2;
  std::vector<double> diff;
  for (const auto& p : paths) {
    if (p.W.size() > opt.depth) diff.push_back(p.W[opt.depth] - p.W[half]);
  }
  out.proxy_error = diff.size() >= 2 ? mean_se(diff).sd : 0.0;
  NeumaierSum asum;
  for (std::size_t n = 1; n <= opt.m_max; ++n) asum.add(a(static_cast<double>(n)));
  out.a_sum = asum.value();

  for (const auto& p : paths) {
    SeriesReplica r{};
    r.stop = p.stop;
    const std::size_t reached = p.W.size() - 1;
    r.w_hat = p.W[reached];
    r.survived = p.stop != StopReason::extinct && r.w_hat > 0.0;
    NeumaierSum T;
    for (std::size_t m = 1; m <= opt.m_max; ++m) {
      double wn = m <= reached ? p.W[m] : r.w_hat;
      T.add(a(static_cast<double>(m)) * (r.w_hat - wn));
      r.T.push_back(T.value());
    }
    const double last = r.T.back();
    r.oscillation = 0.0;
    for (std::size_t m = opt.m_max / 2; m <= opt.m_max; ++m)
      r.oscillation = std::max(r.oscillation, std::fabs(r.T[m - 1] - last));
    r.threshold = std::max(out.proxy_error * out.a_sum, opt.relative_floor * std::fabs(last));
    r.stabilizing = r.oscillation < r.threshold || r.oscillation == 0.0;
    if (r.survived) {
      ++out.surviving;
      out.stabilizing += r.stabilizing;
    }
    out.replicas.push_back(std::move(r));
  }
  return out;
}

double median_oscillation(const SeriesTrace& t) {
  std::vector<double> v;
  for (const auto& r : t.replicas)
    if (r.survived) v.push_back(r.oscillation);
  return median(std::move(v));
}

SumByParts sum_by_parts_check(std::span<const double> a, std::span<const double> R, std::size_t m) {
  if (a.size() < m) throw DomainError("sum_by_parts_check needs a_1..a_m");
  auto Rk = [&](std::size_t k) { return k >= 1 && k <= R.size() ? R[k - 1] : 0.0; };
  NeumaierSum lhs;
  for (std::size_t n = 1; n <= m; ++n) {
    NeumaierSum tail;
    for (std::size_t k = n; k <= R.size(); ++k) tail.add(Rk(k));
    lhs.add(a[n - 1] * tail.value());
  }
  NeumaierSum asum, beyond, second;
  for (std::size_t k = 1; k <= m; ++k) asum.add(a[k - 1]);
  for (std::size_t n = m + 1; n <= R.size(); ++n) beyond.add(Rk(n));
  NeumaierSum partial;
  for (std::size_t n = 1; n <= m; ++n) {
    partial.add(a[n - 1]);
    second.add(Rk(n) * partial.value());
  }
  return {lhs.value(), asum.value() * beyond.value() + second.value()};
}

RenewalLimit renewal_limit_Q(const BranchingModel& model, const RegVarFn& b, std::span<const double> xs, double mu,
                             std::size_t replicas, std::uint64_t seed, const RenewalLimitOptions& opt) {
  if (xs.empty()) throw DomainError("renewal_limit_Q needs x values");
  Simulator sim(model, opt.sim);
  RenewalLimit out;
  out.mu = mu;
  out.depth = q_sum_depth(*std::max_element(xs.begin(), xs.end()), mu, opt.safety);
  const double beta = b.exponent();
  const double norm = (beta + 1.0) * std::pow(mu, beta + 1.0);
  auto per = parallel_map(replicas, opt.workers, [&](std::size_t i) {
    Engine rng = make_engine(seed, "renewal_Q", i);
    auto tr = run_martingale(sim, out.depth, rng, true);
    std::vector<RenewalPoint> pts;
    if (tr.stop == StopReason::extinct) return pts;
    double w_hat = tr.points.back().W;
    auto q = q_sums(tr.states, b, xs);
    for (const auto& s : q) {
      double xb = s.x * b(s.x);
      pts.push_back({i, s.x, s.q / xb, s.q_hat / xb, w_hat, w_hat / norm,
                     s.certified && tr.stop == StopReason::completed});
    }
    return pts;
  });
  for (auto& v : per) {
    if (!v.empty()) ++out.surviving;
    out.points.insert(out.points.end(), v.begin(), v.end());
  }
  return out;
}

std::vector<RenewalSummary> summarize(const RenewalLimit& r) {
  std::vector<double> xs;
  for (const auto& p : r.points)
    if (std::find(xs.begin(), xs.end(), p.x) == xs.end()) xs.push_back(p.x);
  std::vector<RenewalSummary> out;
  for (double x : xs) {
    std::vector<double> dev, gap, row;
    for (const auto& p : r.points) {
      if (p.x != x || !(p.w_hat > 0.0)) continue;
      dev.push_back(std::fabs(p.q_ratio / p.predicted - 1.0));
      gap.push_back(p.q_ratio > 0.0 ? std::fabs(p.qhat_ratio / p.q_ratio - 1.0) : kInf);
      row.push_back(p.q_ratio / p.w_hat);
    }
    RenewalSummary s{x, median(dev), median(gap), median(row), 0.0, row.size()};
    if (!row.empty()) s.iqr_ratio_over_w = quantile(row, 0.75) - quantile(row, 0.25);
    out.push_back(s);
  }
  return out;
}

MomentEquivalence moment_equivalence(const BranchingModel& model, const RegVarFn& a, std::size_t replicas,
                                     std::uint64_t seed, std::size_t depth, unsigned workers, const SimOptions& simopt,
                                     const TruncationOptions& topt) {
  Simulator sim(model, simopt);
  auto est = estimate_W(sim, depth, replicas, seed, workers);
  std::vector<double> ws, w1s;
  ws.reserve(replicas);
  for (const auto& r : est.replicas) {
    double l = log_plus(r.w_hat);
    ws.push_back(l > 0.0 ? r.w_hat * l * a(l) : 0.0);
  }
  auto first = parallel_map(replicas, workers, [&](std::size_t i) {
    Engine rng = make_engine(seed, "moment_w1", i);
    return sim.step(sim.root(), rng).W();
  });
  for (double w : first) {
    double l = log_plus(w);
    w1s.push_back(l > 0.0 ? w * l * l * a(l) : 0.0);
  }
  MomentEquivalence out{truncated_moment("E W log+W a(log+W)", ws, topt),
                        truncated_moment("E W1 (log+W1)^2 a(log+W1)", w1s, topt), est.cap_hits};
  return out;
}

}  // namespace brwlab
