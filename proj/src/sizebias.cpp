#include "brwlab/sizebias.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "brwlab/error.hpp"
#include "brwlab/numeric.hpp"
#include "brwlab/parallel.hpp"
#include "brwlab/stats.hpp"

namespace brwlab {

namespace {

constexpr std::size_t kMaxExactAtoms = 64;

Estimate from_samples(std::span<const double> v) {
  auto ms = mean_se(v);
  return {ms.mean, ms.se, ms.n, false};
}

Estimate exact(double v) { return {v, 0.0, 0, true}; }

std::vector<ZAtom> merge_atoms(std::vector<ZAtom> a) {
  std::sort(a.begin(), a.end(), [](const ZAtom& x, const ZAtom& y) { return x.z < y.z; });
  std::vector<ZAtom> out;
  for (const auto& z : a) {
    if (!out.empty() && z.z - out.back().z <= 1e-12 * z.z)
      out.back().prob += z.prob;
    else
      out.push_back(z);
  }
  return out;
}

// Picks a child with probability proportional to its weight.
double pick_by_weight(const GenerationState& s, double W, Engine& rng) {
  double target = uniform01(rng) * W, acc = 0.0;
  for (const auto& a : s.atoms) {
    acc += a.weight * a.multiplicity;
    if (target < acc) return a.weight;
  }
  return s.atoms.back().weight;
}

}  // namespace

std::string_view to_string(SpineMode m) {
  switch (m) {
    case SpineMode::weighted_mc: return "weighted_mc";
    case SpineMode::exact_atoms: return "exact_atoms";
    case SpineMode::closed_form: return "closed_form";
  }
  return "?";
}

SpineEstimator::SpineEstimator(BranchingModel model, SimOptions opt, bool non_arithmetic)
    : sim_(std::move(model), opt), mode_(SpineMode::weighted_mc), non_arithmetic_(non_arithmetic) {
  if (!std::isfinite(sim_.m())) throw DivergenceError("size-biased law needs finite m(gamma)");
  const auto& m = sim_.model();
  if (galton_watson(m)) {
    mode_ = SpineMode::closed_form;
    atoms_.push_back({1.0 / sim_.m(), 1.0, std::numeric_limits<double>::quiet_NaN()});
  } else if (m.coupling == Coupling::deterministic_fanout &&
             std::get<FixedPositions>(m.displacement).positions.size() <= kMaxExactAtoms) {
    mode_ = SpineMode::exact_atoms;
    Engine unused(0);
    auto g1 = sim_.step(sim_.root(), unused);
    double W = g1.W();
    for (const auto& a : g1.atoms) atoms_.push_back({a.weight, a.weight * a.multiplicity, W});
  }
}

Estimate expect_k(const SpineEstimator& est, const KFunctional& k, std::size_t replicas, std::uint64_t seed,
                  unsigned workers) {
  if (est.mode() == SpineMode::exact_atoms) {
    NeumaierSum s;
    for (const auto& a : est.atoms()) s.add(a.prob * k(a.z, a.s));
    return exact(s.value());
  }
  const Simulator& sim = est.simulator();
  auto v = parallel_map(replicas, workers, [&](std::size_t i) {
    Engine rng = make_engine(seed, "expect_k", i);
    auto g1 = sim.step(sim.root(), rng);
    double W = g1.W();
    NeumaierSum s;
    for (const auto& a : g1.atoms) s.add(a.multiplicity * a.weight * k(a.weight, W));
    return s.value();
  });
  return from_samples(v);
}

Estimate expect_kz(const SpineEstimator& est, const std::function<double(double)>& k, std::size_t replicas,
                   std::uint64_t seed, unsigned workers) {
  if (est.mode() != SpineMode::weighted_mc) {
    NeumaierSum s;
    for (const auto& a : est.atoms()) s.add(a.prob * k(a.z));
    return exact(s.value());
  }
  return expect_k(est, [&](double z, double) { return k(z); }, replicas, seed, workers);
}

Estimate drift_mu(const SpineEstimator& est, std::size_t replicas, std::uint64_t seed, unsigned workers) {
  Estimate mu = expect_kz(est, [](double z) { return -std::log(z); }, replicas, seed, workers);
  if (!(mu.value > 3.0 * mu.se) || (mu.exact && !(mu.value > 0.0)))
    throw NonContracting("drift -E log Z is not positive", mu.value, mu.se);
  return mu;
}

IdentityCheck product_identity_check(const SpineEstimator& est, const std::function<double(double)>& r,
                                     std::size_t n, std::size_t replicas, std::uint64_t seed, unsigned workers) {
  if (n == 0) throw DomainError("product identity needs n >= 1");
  const Simulator& sim = est.simulator();
  IdentityCheck out;

  if (est.mode() == SpineMode::weighted_mc) {
    auto left = parallel_map(replicas, workers, [&](std::size_t i) {
      Engine rng = make_engine(seed, "identity_left", i);
      double weight = 1.0, prod = 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        auto g1 = sim.step(sim.root(), rng);
        double W = g1.W();
        if (W <= 0.0) return 0.0;
        weight *= W;
        prod *= pick_by_weight(g1, W, rng);
      }
      return weight * r(prod);
    });
    out.left = from_samples(left);
  } else {
    std::vector<ZAtom> acc{{1.0, 1.0, 0.0}};
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<ZAtom> next;
      next.reserve(acc.size() * est.atoms().size());
      for (const auto& a : acc)
        for (const auto& b : est.atoms()) next.push_back({a.z * b.z, a.prob * b.prob, 0.0});
      acc = merge_atoms(std::move(next));
    }
    NeumaierSum s;
    for (const auto& a : acc) s.add(a.prob * r(a.z));
    out.left = exact(s.value());
  }

  auto tree_sum = [&](Engine& rng) {
    GenerationState s = sim.root();
    for (std::size_t j = 0; j < n; ++j) s = sim.step(s, rng);
    NeumaierSum sum;
    for (const auto& a : s.atoms) sum.add(a.multiplicity * a.weight * r(a.weight));
    return sum.value();
  };
  if (est.mode() == SpineMode::exact_atoms) {
    Engine unused(0);
    out.right = exact(tree_sum(unused));
  } else {
    auto right = parallel_map(replicas, workers, [&](std::size_t i) {
      Engine rng = make_engine(seed, "identity_right", i);
      return tree_sum(rng);
    });
    out.right = from_samples(right);
  }

  double diff = out.left.value - out.right.value;
  double se = std::hypot(out.left.se, out.right.se);
  if (se > 0.0)
    out.z = diff / se;
  else
    out.z = std::fabs(diff) <= 1e-12 * std::max(1.0, std::fabs(out.left.value)) ? 0.0 : kInf;
  return out;
}

SSample sample_S(const SpineEstimator& est, std::size_t replicas, std::uint64_t seed, unsigned workers) {
  const Simulator& sim = est.simulator();
  SSample out;
  out.pilot = std::max<std::size_t>(10000, replicas / 10);
  auto pilot = parallel_map(out.pilot, workers, [&](std::size_t i) {
    Engine rng = make_engine(seed, "sample_S_pilot", i);
    return sim.step(sim.root(), rng).W();
  });
  out.envelope = quantile(pilot, 0.999);
  if (!(out.envelope > 0.0)) throw DomainError("W_1 is almost surely zero in the pilot sample");
  NeumaierSum excess;
  for (double w : pilot) excess.add(std::max(0.0, w - out.envelope));
  out.truncated_weight = excess.value() / static_cast<double>(pilot.size());

  const double c = out.envelope;
  struct Draw {
    double s;
    std::size_t proposals;
  };
  auto draws = parallel_map(replicas, workers, [&](std::size_t i) {
    Engine rng = make_engine(seed, "sample_S", i);
    for (std::size_t tries = 1; tries <= 10'000'000; ++tries) {
      double w = sim.step(sim.root(), rng).W();
      if (uniform01(rng) * c < std::min(w, c)) return Draw{w, tries};
    }
    throw DomainError("size-biased sampler: acceptance rate below 1e-7");
  });
  std::size_t proposals = 0;
  out.s.reserve(replicas);
  for (const auto& d : draws) {
    out.s.push_back(d.s);
    proposals += d.proposals;
  }
  out.acceptance = proposals ? static_cast<double>(replicas) / static_cast<double>(proposals) : 0.0;
  return out;
}

WeightedLogZ weighted_log_Z(const SpineEstimator& est, std::size_t replicas, std::uint64_t seed) {
  const Simulator& sim = est.simulator();
  WeightedLogZ out;
  out.replicas = replicas;
  for (std::size_t i = 0; i < replicas; ++i) {
    Engine rng = make_engine(seed, "weighted_log_Z", i);
    auto g1 = sim.step(sim.root(), rng);
    for (const auto& a : g1.atoms) {
      out.log_z.push_back(std::log(a.weight));
      out.weight.push_back(a.weight * a.multiplicity);
    }
  }
  return out;
}

}  // namespace brwlab
