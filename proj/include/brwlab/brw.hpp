#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "brwlab/regvar.hpp"
#include "brwlab/rng.hpp"
#include "brwlab/stats.hpp"

namespace brwlab {

struct DeterministicCount {
  std::uint64_t k = 2;
};
struct PoissonCount {
  double lambda = 1.0;
};
// P{L = k} = p (1 - p)^k on {0, 1, ...}.
struct GeometricCount {
  double p = 0.5;
};
// P{L = k} = k^-s / zeta(s) on {1, 2, ...}.
struct ZetaCount {
  double s = 3.0;
};
// P{L >= k} = k0 (ln k0)^p / (k (ln k)^p) for k >= k0, and 1 below k0.
// E L log L < inf iff p > 2; E L (log L)^2 < inf iff p > 3.
struct LogParetoCount {
  double power = 2.5;
  std::uint64_t k0 = 2;
};
using OffspringLaw = std::variant<DeterministicCount, PoissonCount, GeometricCount, ZetaCount, LogParetoCount>;

struct NoDisplacement {};
// Child i sits at positions[i]; used with deterministic fan-out.
struct FixedPositions {
  std::vector<double> positions;
};
struct NormalDisplacement {
  double mean = 0.0;
  double sd = 1.0;
};
struct TwoPointDisplacement {
  double a = 1.0;
  double b = -1.0;
  double prob_a = 0.5;
};
using DisplacementLaw = std::variant<NoDisplacement, FixedPositions, NormalDisplacement, TwoPointDisplacement>;

enum class Coupling { independent, deterministic_fanout };

struct BranchingModel {
  double gamma = 1.0;
  OffspringLaw offspring = DeterministicCount{2};
  DisplacementLaw displacement = NoDisplacement{};
  Coupling coupling = Coupling::independent;
};

std::string describe(const OffspringLaw& law);
std::string describe(const DisplacementLaw& law);

// +inf for infinite-mean laws.
double offspring_mean(const OffspringLaw& law);
double offspring_pmf(const OffspringLaw& law, std::uint64_t k);
bool galton_watson(const BranchingModel& model);
std::optional<double> max_displacement(const DisplacementLaw& law);

// Structural and parameter checks; with require_finite_m the model must be
// supercritical with m(gamma) in (0, inf).
void validate(const BranchingModel& model, bool require_finite_m = true);

struct MEstimate {
  double value = 0.0;
  double se = 0.0;
  bool closed_form = true;
};

// Closed form E L * E e^{gamma X} (or the fan-out sum); DivergenceError when
// the value is infinite.
MEstimate laplace_m(const BranchingModel& model, double gamma);
MEstimate laplace_m_mc(const BranchingModel& model, double gamma, std::size_t replicas,
                       std::uint64_t seed);

struct Atom {
  double weight;
  double multiplicity;
};

// Weights Y_u of one generation, stored as (weight, multiplicity) atoms.
struct GenerationState {
  std::size_t n = 0;
  std::vector<Atom> atoms;

  double W() const;
  double count() const;
  bool extinct() const { return atoms.empty(); }
  double max_weight() const;
};

enum class SimMode { counts, merged_atoms, individuals };
std::string_view to_string(SimMode m);

struct SimOptions {
  // Bound on the work units of one generation: stored atoms, or individual
  // offspring draws for laws without an aggregate sampler.
  double cap = 1e6;
};

class Simulator {
 public:
  explicit Simulator(BranchingModel model, SimOptions opt = {});

  const BranchingModel& model() const { return model_; }
  const SimOptions& options() const { return opt_; }
  double m() const { return m_; }
  double log_m() const { return log_m_; }
  SimMode mode() const { return mode_; }

  GenerationState root() const { return GenerationState{0, {{1.0, 1.0}}}; }
  // Throws PopulationCapExceeded; the empty state maps to itself.
  GenerationState step(const GenerationState& s, Engine& rng) const;

  double sample_offspring(Engine& rng) const;
  double sample_offspring_sum(double count, Engine& rng) const;
  double sample_displacement(Engine& rng) const;

 private:
  BranchingModel model_;
  SimOptions opt_;
  double m_ = 1.0;
  double log_m_ = 0.0;
  SimMode mode_ = SimMode::individuals;
  std::vector<double> fanout_factors_;
};

// Counts-only trajectory; allowed for infinite-mean offspring.
std::vector<double> run_counts(const BranchingModel& model, std::size_t n_max, double cap, Engine& rng);

enum class StopReason { completed, extinct, cap_exceeded };
std::string_view to_string(StopReason r);

struct TracePoint {
  std::size_t n;
  double W;
  double count;
};

struct MartingaleTrace {
  std::vector<TracePoint> points;
  StopReason stop = StopReason::completed;
  std::vector<GenerationState> states;  // filled when requested
};

MartingaleTrace run_martingale(const Simulator& sim, std::size_t n_max, Engine& rng,
                               bool keep_states = false);

struct ReplicaW {
  double w_hat;   // W_N, or W at the last generation reached under the cap
  double w_half;  // W_{N/2}
  std::size_t depth;
  StopReason stop;
};

struct WEstimate {
  std::vector<ReplicaW> replicas;
  double proxy_error = 0.0;  // sd(W_N - W_{N/2})
  MeanSe mean;
  std::size_t cap_hits = 0;
  std::size_t extinct = 0;
};

WEstimate estimate_W(const Simulator& sim, std::size_t depth, std::size_t replicas,
                     std::uint64_t seed, unsigned workers = 1);

struct QSums {
  double x;
  double q = 0.0;
  double q_hat = 0.0;
  bool certified = false;
};

// Q(x) = sum_n b(n) sum_u Y_u 1{Y_u > e^-x} and Q_hat with threshold
// e^-x / b(n), over the generations n >= 1 in `gens`. Certified when the
// last three generations add less than 1e-6 of each running sum.
std::vector<QSums> q_sums(std::span<const GenerationState> gens, const RegVarFn& b,
                          std::span<const double> xs);

// n_max = ceil((x + safety) / (mu - mu/4)).
std::size_t q_sum_depth(double x, double mu_hat, double safety = 10.0);

}  // namespace brwlab
