#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "brwlab/regvar.hpp"
#include "brwlab/rng.hpp"
#include "brwlab/tailcheck.hpp"

namespace brwlab {

struct ConstM {
  double value = 0.5;
};
// M = e^{-E} with E ~ Exp(rate).
struct ExpM {
  double rate = 1.0;
};
struct UniformM {
  double lo = 0.0;
  double hi = 1.0;
};
// Deterministic cycle M_k = values[(k - 1) mod size]; not iid, path tests only.
struct CycleM {
  std::vector<double> values;
};
using MLaw = std::variant<ConstM, ExpM, UniformM, CycleM>;

struct ConstQ {
  double value = 1.0;
};
// log Q ~ Pareto: P{log Q > t} = (scale / t)^index for t >= scale.
struct LogParetoQ {
  double index = 1.5;
  double scale = 1.0;
};
// Q = intercept + slope * M + noise_sd * N(0, 1).
struct CoupledQ {
  double intercept = 1.0;
  double slope = 0.0;
  double noise_sd = 0.0;
};
using QLaw = std::variant<ConstQ, LogParetoQ, CoupledQ>;

struct PerpetuitySpec {
  MLaw m = UniformM{};
  QLaw q = ConstQ{};
};

std::string describe(const PerpetuitySpec& s);
// Closed form over one period for cycles.
double mean_log_abs_m(const MLaw& m);
double mean_abs_m(const MLaw& m);
// E|Q| (+inf when infinite); for coupled Q the bound |a| + |b| E|M| + sd sqrt(2/pi).
double mean_abs_q(const QLaw& q, const MLaw& m);
bool nonnegative(const PerpetuitySpec& s);

// Standing assumptions: P{M = 0} = 0, P{Q = 0} < 1, E log|M| < 0 and
// E log+|Q| < inf. Throws ConfigError.
void validate(const PerpetuitySpec& s);

struct PathPair {
  std::vector<double> m;  // M_1..M_n
  std::vector<double> q;  // Q_1..Q_n
};
// Independent pairs (M_k, Q_k); a cycle M is read from its phase.
PathPair sample_path(const PerpetuitySpec& s, std::size_t n, Engine& rng);

struct ZSample {
  double value;       // Z_inf truncated; may be +-inf for log-heavy Q
  double log_abs;     // log |Z_inf|, accurate when value overflows
  std::size_t terms;  // index k of the stop
  double log_abs_pi;  // log |Pi_k| at the stop
  double remainder_bound;  // 99% Markov bound on |Z - value|; +inf if unbounded
  bool bounded;
  std::size_t completions = 0;  // late big Q's drawn from the asymptotic law
};

struct ZOptions {
  double tol = 1e-12;
  std::size_t horizon_cap = 10'000'000;
  // Log-Pareto Q: keep summing until log Z - log|Pi_k| reaches this window,
  // then add late big Q's from their asymptotic law.
  double heavy_window = 200.0;
};

// Forward sum of Pi_{k-1} Q_k until |Pi_k| < tol * (E|Q| or 1).
// Throws HorizonExceeded.
ZSample sample_Z(const PerpetuitySpec& s, Engine& rng, const ZOptions& opt = {});
std::vector<ZSample> sample_Z_many(const PerpetuitySpec& s, std::size_t replicas, std::uint64_t seed,
                                   const ZOptions& opt = {}, unsigned workers = 1,
                                   std::string_view stream = "sample_Z");

// Indices N_1 < N_2 < ... of successive strict minima of |Pi_n|, from
// log|Pi_0| = 0, log|Pi_1|, ... Throws DomainError when the path runs out.
std::vector<std::size_t> ladder_epochs(std::span<const double> log_abs_pi, std::size_t count);
// Every ladder epoch within the path.
std::vector<std::size_t> all_ladder_epochs(std::span<const double> log_abs_pi);
std::vector<double> log_abs_products(std::span<const double> m);

struct Block {
  double m;  // |M_{N_{k-1}+1} ... M_{N_k}|
  double q;  // sum over the block of |partial product| |Q_j|
};
struct BlockDecomposition {
  std::vector<Block> blocks;
  double direct = 0.0;   // sum_{j <= N_K} |Pi_{j-1}| |Q_j|
  double blocked = 0.0;  // sum_k Pi'_{k-1} Q'_k
  std::size_t covered = 0;      // N_K
  bool trailing_incomplete = false;
  double rel_error() const;
};
BlockDecomposition block_decompose(const PathPair& path, std::span<const std::size_t> epochs);

struct EpochStats {
  std::vector<double> first_epoch;  // N_1 per replica
  MomentDiagnostic diagnostic;
  std::size_t exhausted = 0;  // paths without an epoch within max_len
};
EpochStats first_epoch_stats(const PerpetuitySpec& s, std::size_t replicas, std::uint64_t seed,
                             std::size_t max_len = 1'000'000, unsigned workers = 1);

struct PerpetuityMoments {
  MomentDiagnostic z_side;  // E b(log+|Z_inf|)
  MomentDiagnostic m_side;  // E c(log+|M|)
  MomentDiagnostic q_side;  // E c(log+|Q|)
  bool consistent() const { return z_side.diverging == (m_side.diverging || q_side.diverging); }
};
// Truncated-moment diagnostics for the three sides of the moment equivalence
// between Z_inf and the pair (M, Q), with c = derive_c(b).
PerpetuityMoments perpetuity_moments(const PerpetuitySpec& s, const RegVarFn& b, std::size_t replicas,
                                     std::uint64_t seed, const ZOptions& opt = {}, unsigned workers = 1,
                                     const TruncationOptions& topt = {});

}  // namespace brwlab
