#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "brwlab/numeric.hpp"
#include "brwlab/regvar.hpp"
#include "brwlab/rng.hpp"
#include "brwlab/sizebias.hpp"
#include "brwlab/tailcheck.hpp"

namespace brwlab {

struct NormalStep {
  double mean = 1.0;
  double sd = 1.0;
};
// Exp(rate) - shift.
struct ShiftedExpStep {
  double rate = 1.0;
  double shift = 0.0;
};
struct TwoPointStep {
  double a = 1.0;
  double b = -1.0;
  double prob_a = 0.5;
};
struct ConstantStep {
  double value = 1.0;
};
// Weighted atoms, e.g. -log Z draws from the size-biased law.
struct EmpiricalStep {
  std::vector<double> values;
  std::vector<double> weights;
};
// P - shift where P{P > t} = (scale / t)^index for t >= scale.
struct ParetoStep {
  double index = 1.5;
  double scale = 1.0;
  double shift = 4.0;
};
using StepLaw = std::variant<NormalStep, ShiftedExpStep, TwoPointStep, ConstantStep, EmpiricalStep, ParetoStep>;

enum class CdfMode { exact, monte_carlo };

struct WalkSpec {
  StepLaw step = NormalStep{};
  CdfMode cdf_mode = CdfMode::exact;
  std::size_t mc_replicas = 10000;
  std::uint64_t seed = 0;
};

std::string describe(const StepLaw& s);
double step_mean(const StepLaw& s);
double step_variance(const StepLaw& s);
bool has_exact_cdf(const StepLaw& s);
// log E e^{theta X}, +inf where the transform diverges.
double log_mgf(const StepLaw& s, double theta);
void validate(const WalkSpec& w);

// -log Z steps with the weights of the size-biased representation.
EmpiricalStep empirical_from_log_Z(const WeightedLogZ& d);

class StepSampler {
 public:
  explicit StepSampler(StepLaw s);
  double operator()(Engine& rng) const;
  const StepLaw& law() const { return law_; }

 private:
  StepLaw law_;
  std::vector<double> cumulative_;
};

// P{S_n <= y} for families with a closed n-step law.
double cdf_n(const StepLaw& s, std::uint64_t n, double y);
Estimate mc_cdf_n(const StepLaw& s, std::uint64_t n, double y, std::size_t replicas, std::uint64_t seed);

// sup_{theta > 0} theta a - log E e^{theta X} (side above) or
// sup_{theta > 0} -theta a - log E e^{-theta X} (side below), with the optimizer.
struct ChernoffRate {
  double rate = 0.0;
  double theta = 0.0;
};
enum class Side { above, below };
ChernoffRate chernoff_rate(const StepLaw& s, double a, Side side);

struct VValue {
  double value = 0.0;
  double se = 0.0;
  std::uint64_t terms = 0;  // N(x)
  double tail_bound = 0.0;
  bool exact = true;
};

// V(x) = sum_n b(n) P{S_n <= log b(n) + log x}, truncated where the Chernoff
// bound on the remainder falls below tol.
VValue renewal_V(const WalkSpec& walk, const RegVarFn& b, double x, double tol = 1e-10);
VValue renewal_V_log(const WalkSpec& walk, const RegVarFn& b, double log_x, double tol = 1e-10);

struct RenewalOptions {
  double ratio = 1.05;
  double log_lo = 1.0;
  double log_hi = 30.0;
  double head = 40.0;  // extra e-folds tabulated below log_lo for K's lower limit
  double tol = 1e-10;
  double form_tol = 0.01;
  unsigned workers = 1;
};

struct RenewalRow {
  double log_x;
  double V;
  double K;
  double K_stieltjes;
  double M;
  double M_stieltjes;
  std::uint64_t terms;
  double tail_bound;
};

class RenewalTable {
 public:
  // Throws GridResolutionError when the two K or M forms differ by more
  // than form_tol anywhere on [log_lo, log_hi].
  static RenewalTable build(const WalkSpec& walk, const RegVarFn& b, const RenewalOptions& opt = {});

  const std::vector<RenewalRow>& rows() const { return rows_; }
  double mu() const { return mu_; }
  double log_lo() const { return opt_.log_lo; }
  double log_hi() const { return opt_.log_hi; }
  // Contribution of the asymptotic tail beyond the grid to every M value.
  double m_tail() const { return m_tail_; }
  const RenewalOptions& options() const { return opt_; }
  const RegVarFn& b() const { return b_; }
  const WalkSpec& walk() const { return walk_; }

  // Rows with log_x >= log_lo, i.e. without the head sub-grid.
  std::vector<RenewalRow> exported() const;

 private:
  RenewalTable(WalkSpec w, RegVarFn b, RenewalOptions o) : walk_(std::move(w)), b_(std::move(b)), opt_(o) {}
  WalkSpec walk_;
  RegVarFn b_;
  RenewalOptions opt_;
  double mu_ = 0.0;
  double m_tail_ = 0.0;
  std::vector<RenewalRow> rows_;
};

struct KM {
  double K;
  double M;
  bool asymptotic_tail;  // M includes the extrapolated tail beyond the grid
};
// Log-linear interpolation in the table; DomainError outside the grid.
KM km_functions(const RenewalTable& t, double log_x);

// (V(hx) - V(x)) / (mu^{-beta-1} b(log x)), with V computed directly.
double dehaan_increment(const RenewalTable& t, double log_x, double h);

struct DriftSeries {
  std::vector<double> partial;  // partial[n-1] = sum of the first n terms
  double tail_bound = kInf;
  bool certified = false;
  std::string verdict() const { return certified ? "convergent (certified)" : "inconclusive"; }
};

// Partial sums of phi(n) P{T_n > (mu + eps) n} (above) or
// phi(n) P{T_n <= (mu - eps) n} (below), with a Chernoff tail bound.
DriftSeries drift_series(const WalkSpec& walk, const RegVarFn& phi, double eps, Side side, std::uint64_t N);

// Root kappa > 0 of E e^{kappa X} = 1 for a negative-drift step; +inf when
// X <= 0 a.s., nullopt when the transform is infinite for every kappa > 0.
std::optional<double> cramer_root(const StepLaw& s);

struct PassageOptions {
  std::uint64_t horizon = 10'000'000;
  double bias_tol = 1e-6;
  // Window used when the step has no exponential moment. Pareto steps then
  // finish each path with one draw from the asymptotic overshoot law.
  double heavy_window = 1e3;
  unsigned workers = 1;
};

struct PassageSample {
  double sup;  // M_inf, the all-time supremum (S_0 = 0 included)
  std::vector<std::uint64_t> tau;        // tau_x = inf{n : S_n < -x}, per x
  std::vector<double> sup_before_tau;    // sup_{n < tau_x} S_n, per x
  std::uint64_t steps;
  bool horizon_hit;
};

struct PassageRun {
  std::vector<double> xs;
  std::vector<PassageSample> samples;
  double window = 0.0;  // stop once the walk sits this far below its maximum
  // Per-path probability that M_inf is underestimated; for heavy tails, the
  // asymptotic probability that the completion step fires.
  double bias_bound = 0.0;
  bool bias_certified = true;
  std::size_t horizon_hits = 0;
};

PassageRun passage_functionals(const WalkSpec& walk, std::span<const double> xs, std::size_t replicas,
                               std::uint64_t seed, const PassageOptions& opt = {});

struct LadderMoments {
  MomentDiagnostic m_inf;       // E u(M_inf)
  MomentDiagnostic sup_before;  // E v(sup_{n < tau_x} S_n)
  MomentDiagnostic step;        // E xi+ h(xi+)
};

// u, v and h act on the walk scale; e.g. u(t) = f_tilde(e^t).
LadderMoments ladder_moment_pair(const WalkSpec& walk, double x, const std::function<double(double)>& u,
                                 const std::function<double(double)>& v,
                                 const std::function<double(double)>& h, std::size_t replicas,
                                 std::uint64_t seed, const PassageOptions& opt = {},
                                 const TruncationOptions& topt = {});

}  // namespace brwlab
