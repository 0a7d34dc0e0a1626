#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "brwlab/brw.hpp"
#include "brwlab/regvar.hpp"
#include "brwlab/tailcheck.hpp"

namespace brwlab {

struct SeriesOptions {
  std::size_t m_max = 30;
  std::size_t depth = 60;  // proxy depth N, at least 2 m_max
  double relative_floor = 0.01;
  unsigned workers = 1;
  SimOptions sim = {};
};

struct SeriesReplica {
  std::vector<double> T;  // T[m-1] = sum_{n=1..m} a(n) (W_hat - W_n)
  double w_hat;
  double oscillation;  // sup_{m in [m_max/2, m_max]} |T_m - T_{m_max}|
  double threshold;
  bool survived;
  bool stabilizing;
  StopReason stop;
};

struct SeriesTrace {
  std::vector<SeriesReplica> replicas;
  double proxy_error = 0.0;  // sd(W_N - W_{N/2})
  double a_sum = 0.0;        // sum_{n <= m_max} a(n)
  std::size_t surviving = 0;
  std::size_t stabilizing = 0;  // among surviving replicas
  double stabilizing_fraction() const {
    return surviving ? static_cast<double>(stabilizing) / static_cast<double>(surviving) : 1.0;
  }
};

// W_hat = W_N. A replica is stabilizing when its oscillation is below
// max(proxy_error * a_sum, relative_floor * |T_{m_max}|).
SeriesTrace series_trace(const BranchingModel& model, const RegVarFn& a, std::size_t replicas, std::uint64_t seed,
                         const SeriesOptions& opt = {});

// Median oscillation over surviving replicas.
double median_oscillation(const SeriesTrace& t);

struct SumByParts {
  double lhs;
  double rhs;
};
// sum_{n<=m} a_n sum_{k>=n} R_k versus
// (sum_{k<=m} a_k) sum_{n>m} R_n + sum_{n<=m} R_n sum_{k<=n} a_k, 1-based.
SumByParts sum_by_parts_check(std::span<const double> a, std::span<const double> R, std::size_t m);

struct RenewalPoint {
  std::size_t replica;
  double x;
  double q_ratio;     // Q(x) / (x b(x))
  double qhat_ratio;  // Q_hat(x) / (x b(x))
  double w_hat;
  double predicted;   // w_hat / ((beta + 1) mu^{beta + 1})
  bool certified;
};

struct RenewalLimit {
  std::vector<RenewalPoint> points;
  double mu = 0.0;
  std::size_t depth = 0;
  std::size_t surviving = 0;
};

struct RenewalLimitOptions {
  double safety = 10.0;
  unsigned workers = 1;
  SimOptions sim = {};
};

// Trees of depth q_sum_depth(max x, mu); surviving replicas only.
RenewalLimit renewal_limit_Q(const BranchingModel& model, const RegVarFn& b, std::span<const double> xs, double mu,
                             std::size_t replicas, std::uint64_t seed, const RenewalLimitOptions& opt = {});

struct RenewalSummary {
  double x;
  double median_rel_dev;      // median |q_ratio / predicted - 1|
  double median_hat_gap;      // median |qhat_ratio / q_ratio - 1|
  double median_ratio_over_w;  // median q_ratio / w_hat
  double iqr_ratio_over_w;
  std::size_t n;
};
std::vector<RenewalSummary> summarize(const RenewalLimit& r);

struct MomentEquivalence {
  MomentDiagnostic w_side;   // E W log+W a(log+W), W proxied by W_N
  MomentDiagnostic w1_side;  // E W_1 (log+W_1)^2 a(log+W_1)
  std::size_t cap_hits = 0;
  bool agree() const { return w_side.diverging == w1_side.diverging; }
};

MomentEquivalence moment_equivalence(const BranchingModel& model, const RegVarFn& a, std::size_t replicas,
                                     std::uint64_t seed, std::size_t depth, unsigned workers = 1,
                                     const SimOptions& sim = {}, const TruncationOptions& topt = {});

}  // namespace brwlab
