#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "brwlab/brw.hpp"

namespace brwlab {

enum class SpineMode { weighted_mc, exact_atoms, closed_form };
std::string_view to_string(SpineMode m);

// Joint atom of (Z, S) with its probability.
struct ZAtom {
  double z;
  double prob;
  double s;
};

// Expectations over the size-biased pair (Z, S), defined through
// E sum_u Y_u k(Y_u, W_1) = E k(Z, S) over the first generation.
class SpineEstimator {
 public:
  explicit SpineEstimator(BranchingModel model, SimOptions opt = {}, bool non_arithmetic = false);

  SpineMode mode() const { return mode_; }
  const Simulator& simulator() const { return sim_; }
  // Exact (Z, S) atoms in exact_atoms mode, the single Z atom (with s = NaN)
  // in closed_form mode, empty otherwise.
  const std::vector<ZAtom>& atoms() const { return atoms_; }
  // User assertion that log Z is non-arithmetic; recorded, never tested.
  bool non_arithmetic() const { return non_arithmetic_; }

 private:
  Simulator sim_;
  SpineMode mode_;
  std::vector<ZAtom> atoms_;
  bool non_arithmetic_;
};

struct Estimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t replicas = 0;
  bool exact = false;
  // Relative standard error above 50%.
  bool unstable() const { return !exact && se > 0.5 * std::abs(value); }
};

using KFunctional = std::function<double(double z, double s)>;

Estimate expect_k(const SpineEstimator& est, const KFunctional& k, std::size_t replicas,
                  std::uint64_t seed, unsigned workers = 1);
// For functionals of Z alone; exact in closed_form mode as well.
Estimate expect_kz(const SpineEstimator& est, const std::function<double(double)>& k,
                   std::size_t replicas, std::uint64_t seed, unsigned workers = 1);

// mu = -E log Z. Throws NonContracting unless the estimate exceeds 3 SE.
Estimate drift_mu(const SpineEstimator& est, std::size_t replicas, std::uint64_t seed,
                  unsigned workers = 1);

struct IdentityCheck {
  Estimate left;   // E r(Z_1 ... Z_n)
  Estimate right;  // E sum_{|u|=n} Y_u r(Y_u)
  double z = 0.0;
};

IdentityCheck product_identity_check(const SpineEstimator& est, const std::function<double(double)>& r,
                                     std::size_t n, std::size_t replicas, std::uint64_t seed,
                                     unsigned workers = 1);

struct SSample {
  std::vector<double> s;
  double envelope = 0.0;          // acceptance cap on W_1 (0.999 pilot quantile)
  double acceptance = 0.0;        // accepted / proposed
  double truncated_weight = 0.0;  // pilot estimate of E (W_1 - envelope)^+
  std::size_t pilot = 0;
};

// Size-biased law of W_1 by acceptance against min(W_1, envelope) / envelope.
SSample sample_S(const SpineEstimator& est, std::size_t replicas, std::uint64_t seed,
                 unsigned workers = 1);

// Unbiased weighted draws of log Z: every first-generation child of every
// replica contributes (log Y_u, Y_u); weights average to one per replica.
struct WeightedLogZ {
  std::vector<double> log_z;
  std::vector<double> weight;
  std::size_t replicas = 0;
};
WeightedLogZ weighted_log_Z(const SpineEstimator& est, std::size_t replicas, std::uint64_t seed);

}  // namespace brwlab
