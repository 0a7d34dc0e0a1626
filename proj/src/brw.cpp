#include "brwlab/brw.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "brwlab/error.hpp"
#include "brwlab/numeric.hpp"
#include "brwlab/parallel.hpp"

namespace brwlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double log_pareto_survival(const LogParetoCount& l, double k) {
  double k0 = static_cast<double>(l.k0);
  if (k <= k0) return 1.0;
  return k0 * std::pow(std::log(k0), l.power) / (k * std::pow(std::log(k), l.power));
}

double log_pareto_mean(const LogParetoCount& l) {
  if (l.power <= 1.0) return kInf;
  const double k0 = static_cast<double>(l.k0);
  const double c = k0 * std::pow(std::log(k0), l.power);
  const std::uint64_t K = 2'000'000;
  NeumaierSum s;
  s.add(k0);  // P{L >= k} = 1 for k = 1..k0
  for (std::uint64_t k = l.k0 + 1; k <= K; ++k) s.add(log_pareto_survival(l, static_cast<double>(k)));
  // Euler-Maclaurin remainder for sum_{k > K} c / (k (ln k)^p).
  double lk = std::log(static_cast<double>(K));
  double fK = c / (static_cast<double>(K) * std::pow(lk, l.power));
  s.add(c * std::pow(lk, 1.0 - l.power) / (l.power - 1.0) - 0.5 * fK);
  return s.value();
}

// Inverse-CDF draw of the continuous law with the log-Pareto survival
// function; the offspring count is its integer part.
double sample_log_pareto(const LogParetoCount& l, Engine& rng) {
  double k0 = static_cast<double>(l.k0);
  double u = uniform_open(rng);
  double lc = std::log(k0) + l.power * std::log(std::log(k0)) - std::log(u);
  // Solve z + p ln z = lc for z = ln t on [ln k0, max(lc, 1)].
  double lo = std::log(k0), hi = std::max(lc, 1.0);
  double z = std::clamp(lc, lo, hi);
  for (int it = 0; it < 100; ++it) {
    double g = z + l.power * std::log(z) - lc;
    if (g > 0) hi = z; else lo = z;
    double zn = z - g / (1.0 + l.power / z);
    if (!(zn > lo && zn < hi)) zn = 0.5 * (lo + hi);
    if (std::fabs(zn - z) <= 1e-13 * zn) {
      z = zn;
      break;
    }
    z = zn;
  }
  return std::floor(std::exp(z));
}

// Devroye's rejection sampler for the zeta law.
double sample_zeta(double s, Engine& rng) {
  const double b = std::pow(2.0, s - 1.0);
  for (;;) {
    double u = uniform_open(rng);
    double v = uniform01(rng);
    double x = std::floor(std::pow(u, -1.0 / (s - 1.0)));
    if (!std::isfinite(x)) continue;
    double t = std::pow(1.0 + 1.0 / x, s - 1.0);
    if (v * x * (t - 1.0) / (b - 1.0) <= t / b) return x;
  }
}

double sample_poisson(double mean, Engine& rng) {
  if (mean <= 0.0) return 0.0;
  if (mean < 1e9) return static_cast<double>(std::poisson_distribution<long long>(mean)(rng));
  double v = std::normal_distribution<double>(mean, std::sqrt(mean))(rng);
  return std::max(0.0, std::round(v));
}

}  // namespace

std::string describe(const OffspringLaw& law) {
  return std::visit(overloaded{
                        [](const DeterministicCount& d) { return "deterministic(" + std::to_string(d.k) + ")"; },
                        [](const PoissonCount& p) { return "poisson(" + num(p.lambda) + ")"; },
                        [](const GeometricCount& g) { return "geometric(" + num(g.p) + ")"; },
                        [](const ZetaCount& z) { return "zeta(" + num(z.s) + ")"; },
                        [](const LogParetoCount& l) {
                          return "log_pareto(" + num(l.power) + ", k0=" + std::to_string(l.k0) + ")";
                        },
                    },
                    law);
}

std::string describe(const DisplacementLaw& law) {
  return std::visit(overloaded{
                        [](const NoDisplacement&) { return std::string("none"); },
                        [](const FixedPositions& f) {
                          std::string s = "fixed(";
                          for (std::size_t i = 0; i < f.positions.size(); ++i)
                            s += (i ? "," : "") + num(f.positions[i]);
                          return s + ")";
                        },
                        [](const NormalDisplacement& n) { return "normal(" + num(n.mean) + "," + num(n.sd) + ")"; },
                        [](const TwoPointDisplacement& t) {
                          return "two_point(" + num(t.a) + "," + num(t.b) + "," + num(t.prob_a) + ")";
                        },
                    },
                    law);
}

double offspring_mean(const OffspringLaw& law) {
  return std::visit(overloaded{
                        [](const DeterministicCount& d) { return static_cast<double>(d.k); },
                        [](const PoissonCount& p) { return p.lambda; },
                        [](const GeometricCount& g) { return (1.0 - g.p) / g.p; },
                        [](const ZetaCount& z) {
                          return z.s > 2.0 ? std::riemann_zeta(z.s - 1.0) / std::riemann_zeta(z.s) : kInf;
                        },
                        [](const LogParetoCount& l) { return log_pareto_mean(l); },
                    },
                    law);
}

double offspring_pmf(const OffspringLaw& law, std::uint64_t k) {
  const double kd = static_cast<double>(k);
  return std::visit(overloaded{
                        [&](const DeterministicCount& d) { return k == d.k ? 1.0 : 0.0; },
                        [&](const PoissonCount& p) { return std::exp(kd * std::log(p.lambda) - p.lambda - std::lgamma(kd + 1.0)); },
                        [&](const GeometricCount& g) { return g.p * std::pow(1.0 - g.p, kd); },
                        [&](const ZetaCount& z) { return k == 0 ? 0.0 : std::pow(kd, -z.s) / std::riemann_zeta(z.s); },
                        [&](const LogParetoCount& l) {
                          return log_pareto_survival(l, kd) - log_pareto_survival(l, kd + 1.0);
                        },
                    },
                    law);
}

bool galton_watson(const BranchingModel& model) {
  return std::holds_alternative<NoDisplacement>(model.displacement);
}

std::optional<double> max_displacement(const DisplacementLaw& law) {
  return std::visit(overloaded{
                        [](const NoDisplacement&) -> std::optional<double> { return 0.0; },
                        [](const FixedPositions& f) -> std::optional<double> {
                          if (f.positions.empty()) return std::nullopt;
                          return *std::max_element(f.positions.begin(), f.positions.end());
                        },
                        [](const NormalDisplacement&) -> std::optional<double> { return std::nullopt; },
                        [](const TwoPointDisplacement& t) -> std::optional<double> { return std::max(t.a, t.b); },
                    },
                    law);
}

void validate(const BranchingModel& model, bool require_finite_m) {
  if (!std::isfinite(model.gamma) || model.gamma < 0.0) throw ConfigError("gamma must be finite and >= 0");
  std::visit(overloaded{
                 [](const DeterministicCount&) {},
                 [](const PoissonCount& p) {
                   if (!(p.lambda > 0.0) || !std::isfinite(p.lambda)) throw ConfigError("poisson lambda must be > 0");
                 },
                 [](const GeometricCount& g) {
                   if (!(g.p > 0.0 && g.p < 1.0)) throw ConfigError("geometric p must lie in (0, 1)");
                 },
                 [](const ZetaCount& z) {
                   if (!(z.s > 1.0) || !std::isfinite(z.s)) throw ConfigError("zeta s must be > 1");
                 },
                 [](const LogParetoCount& l) {
                   if (!(l.power > 0.0) || l.k0 < 2) throw ConfigError("log_pareto needs power > 0 and k0 >= 2");
                 },
             },
             model.offspring);
  std::visit(overloaded{
                 [](const NoDisplacement&) {},
                 [](const FixedPositions& f) {
                   if (f.positions.empty()) throw ConfigError("fixed positions must be non-empty");
                   for (double x : f.positions)
                     if (!std::isfinite(x)) throw ConfigError("fixed positions must be finite");
                 },
                 [](const NormalDisplacement& n) {
                   if (!std::isfinite(n.mean) || !(n.sd >= 0.0) || !std::isfinite(n.sd))
                     throw ConfigError("normal displacement needs finite mean and sd >= 0");
                 },
                 [](const TwoPointDisplacement& t) {
                   if (!std::isfinite(t.a) || !std::isfinite(t.b) || !(t.prob_a >= 0.0 && t.prob_a <= 1.0))
                     throw ConfigError("two_point displacement needs finite atoms and prob_a in [0, 1]");
                 },
             },
             model.displacement);
  bool fixed = std::holds_alternative<FixedPositions>(model.displacement);
  if (model.coupling == Coupling::deterministic_fanout) {
    auto* d = std::get_if<DeterministicCount>(&model.offspring);
    if (!fixed || !d || d->k != std::get<FixedPositions>(model.displacement).positions.size())
      throw ConfigError("deterministic_fanout needs deterministic offspring k and k fixed positions");
  } else if (fixed) {
    throw ConfigError("fixed positions require coupling deterministic_fanout");
  }
  if (model.gamma == 0.0 && !galton_watson(model))
    throw ConfigError("gamma = 0 is allowed only without displacements (Galton-Watson mode)");
  if (!require_finite_m) return;
  double mean = offspring_mean(model.offspring);
  if (std::isfinite(mean) && !(mean > 1.0))
    throw ConfigError("offspring mean " + num(mean) + " is not supercritical");
  double m = laplace_m(model, model.gamma).value;
  if (!(m > 0.0)) throw ConfigError("m(gamma) must be positive");
}

MEstimate laplace_m(const BranchingModel& model, double gamma) {
  if (model.coupling == Coupling::deterministic_fanout) {
    const auto& f = std::get<FixedPositions>(model.displacement);
    NeumaierSum s;
    for (double x : f.positions) s.add(std::exp(gamma * x));
    return {s.value(), 0.0, true};
  }
  double mean = offspring_mean(model.offspring);
  if (!std::isfinite(mean))
    throw DivergenceError("m(gamma) is infinite: offspring law " + describe(model.offspring) + " has infinite mean");
  double mgf = std::visit(overloaded{
                              [](const NoDisplacement&) { return 1.0; },
                              [](const FixedPositions&) { return kInf; },
                              [&](const NormalDisplacement& n) {
                                return std::exp(gamma * n.mean + 0.5 * gamma * gamma * n.sd * n.sd);
                              },
                              [&](const TwoPointDisplacement& t) {
                                return t.prob_a * std::exp(gamma * t.a) + (1.0 - t.prob_a) * std::exp(gamma * t.b);
                              },
                          },
                          model.displacement);
  double m = mean * mgf;
  if (!std::isfinite(m)) throw DivergenceError("m(gamma) overflows");
  return {m, 0.0, true};
}

MEstimate laplace_m_mc(const BranchingModel& model, double gamma, std::size_t replicas, std::uint64_t seed) {
  BranchingModel probe = model;
  probe.gamma = gamma;
  validate(probe, false);
  std::vector<double> v(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    Engine rng = make_engine(seed, "laplace_m", r);
    NeumaierSum s;
    if (model.coupling == Coupling::deterministic_fanout) {
      for (double x : std::get<FixedPositions>(model.displacement).positions) s.add(std::exp(gamma * x));
    } else {
      Simulator sampler_only(probe, {});
      double L = sampler_only.sample_offspring(rng);
      for (double j = 0; j < L; ++j) s.add(std::exp(gamma * sampler_only.sample_displacement(rng)));
    }
    v[r] = s.value();
  }
  auto ms = mean_se(v);
  return {ms.mean, ms.se, false};
}

double GenerationState::W() const {
  NeumaierSum s;
  for (const auto& a : atoms) s.add(a.weight * a.multiplicity);
  return s.value();
}

double GenerationState::count() const {
  double c = 0.0;
  for (const auto& a : atoms) c += a.multiplicity;
  return c;
}

double GenerationState::max_weight() const {
  double m = 0.0;
  for (const auto& a : atoms) m = std::max(m, a.weight);
  return m;
}

std::string_view to_string(SimMode m) {
  switch (m) {
    case SimMode::counts: return "counts";
    case SimMode::merged_atoms: return "merged_atoms";
    case SimMode::individuals: return "individuals";
  }
  return "?";
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::completed: return "completed";
    case StopReason::extinct: return "extinct";
    case StopReason::cap_exceeded: return "cap_exceeded";
  }
  return "?";
}

Simulator::Simulator(BranchingModel model, SimOptions opt) : model_(std::move(model)), opt_(opt) {
  validate(model_, false);
  if (galton_watson(model_)) {
    mode_ = SimMode::counts;
  } else if (model_.coupling == Coupling::deterministic_fanout) {
    mode_ = SimMode::merged_atoms;
  } else {
    mode_ = SimMode::individuals;
  }
  double mean = offspring_mean(model_.offspring);
  if (std::isfinite(mean) || model_.coupling == Coupling::deterministic_fanout) {
    m_ = laplace_m(model_, model_.gamma).value;
    log_m_ = std::log(m_);
  } else {
    m_ = kInf;
    log_m_ = kInf;
  }
  if (mode_ == SimMode::merged_atoms) {
    for (double x : std::get<FixedPositions>(model_.displacement).positions)
      fanout_factors_.push_back(std::exp(model_.gamma * x) / m_);
  }
}

double Simulator::sample_offspring(Engine& rng) const {
  return std::visit(overloaded{
                        [](const DeterministicCount& d) { return static_cast<double>(d.k); },
                        [&](const PoissonCount& p) { return sample_poisson(p.lambda, rng); },
                        [&](const GeometricCount& g) {
                          return static_cast<double>(std::geometric_distribution<long long>(g.p)(rng));
                        },
                        [&](const ZetaCount& z) { return sample_zeta(z.s, rng); },
                        [&](const LogParetoCount& l) { return sample_log_pareto(l, rng); },
                    },
                    model_.offspring);
}

double Simulator::sample_offspring_sum(double count, Engine& rng) const {
  if (count <= 0.0) return 0.0;
  auto per_individual = [&]() {
    if (count > opt_.cap)
      throw PopulationCapExceeded("population " + num(count) + " exceeds cap " + num(opt_.cap));
    double total = 0.0;
    for (double i = 0; i < count; ++i) total += sample_offspring(rng);
    return total;
  };
  return std::visit(overloaded{
                        [&](const DeterministicCount& d) { return count * static_cast<double>(d.k); },
                        [&](const PoissonCount& p) { return sample_poisson(count * p.lambda, rng); },
                        [&](const GeometricCount& g) {
                          if (count <= 32.0) return per_individual();
                          // Negative binomial as a gamma mixture of Poissons.
                          double lam = std::gamma_distribution<double>(count, (1.0 - g.p) / g.p)(rng);
                          return sample_poisson(lam, rng);
                        },
                        [&](const ZetaCount&) { return per_individual(); },
                        [&](const LogParetoCount&) { return per_individual(); },
                    },
                    model_.offspring);
}

double Simulator::sample_displacement(Engine& rng) const {
  return std::visit(overloaded{
                        [](const NoDisplacement&) { return 0.0; },
                        [](const FixedPositions&) -> double {
                          throw DomainError("fixed positions have no per-child sampler");
                        },
                        [&](const NormalDisplacement& n) {
                          return n.sd == 0.0 ? n.mean : std::normal_distribution<double>(n.mean, n.sd)(rng);
                        },
                        [&](const TwoPointDisplacement& t) { return uniform01(rng) < t.prob_a ? t.a : t.b; },
                    },
                    model_.displacement);
}

GenerationState Simulator::step(const GenerationState& s, Engine& rng) const {
  GenerationState out;
  out.n = s.n + 1;
  if (s.extinct()) return out;
  if (!std::isfinite(m_)) throw DivergenceError("step needs finite m(gamma)");

  switch (mode_) {
    case SimMode::counts: {
      double next = sample_offspring_sum(s.count(), rng);
      if (next > 0.0) out.atoms.push_back({std::pow(m_, -static_cast<double>(out.n)), next});
      return out;
    }
    case SimMode::merged_atoms: {
      double atoms = static_cast<double>(s.atoms.size()) * static_cast<double>(fanout_factors_.size());
      if (atoms > opt_.cap)
        throw PopulationCapExceeded("atom count " + num(atoms) + " exceeds cap " + num(opt_.cap));
      std::vector<Atom> kids;
      kids.reserve(static_cast<std::size_t>(atoms));
      for (const auto& a : s.atoms)
        for (double f : fanout_factors_) kids.push_back({a.weight * f, a.multiplicity});
      std::sort(kids.begin(), kids.end(), [](const Atom& x, const Atom& y) { return x.weight < y.weight; });
      for (const auto& k : kids) {
        if (!out.atoms.empty() && k.weight - out.atoms.back().weight <= 1e-12 * k.weight)
          out.atoms.back().multiplicity += k.multiplicity;
        else
          out.atoms.push_back(k);
      }
      return out;
    }
    case SimMode::individuals: {
      const double g = model_.gamma;
      double made = 0.0;
      for (const auto& a : s.atoms) {
        for (double r = 0; r < a.multiplicity; ++r) {
          double L = sample_offspring(rng);
          made += L;
          if (made > opt_.cap)
            throw PopulationCapExceeded("generation " + std::to_string(out.n) + " exceeds cap " + num(opt_.cap));
          for (double j = 0; j < L; ++j) {
            double w = a.weight * std::exp(g * sample_displacement(rng)) / m_;
            out.atoms.push_back({w, 1.0});
          }
        }
      }
      return out;
    }
  }
  return out;
}

std::vector<double> run_counts(const BranchingModel& model, std::size_t n_max, double cap, Engine& rng) {
  BranchingModel gw = model;
  gw.displacement = NoDisplacement{};
  gw.coupling = Coupling::independent;
  Simulator sim(gw, {cap});
  std::vector<double> counts{1.0};
  double c = 1.0;
  for (std::size_t n = 0; n < n_max && c > 0.0; ++n) {
    c = sim.sample_offspring_sum(c, rng);
    counts.push_back(c);
  }
  return counts;
}

MartingaleTrace run_martingale(const Simulator& sim, std::size_t n_max, Engine& rng, bool keep_states) {
  MartingaleTrace t;
  GenerationState s = sim.root();
  t.points.push_back({0, 1.0, 1.0});
  if (keep_states) t.states.push_back(s);
  for (std::size_t n = 0; n < n_max; ++n) {
    if (s.extinct()) {
      t.stop = StopReason::extinct;
      return t;
    }
    try {
      s = sim.step(s, rng);
    } catch (const PopulationCapExceeded&) {
      t.stop = StopReason::cap_exceeded;
      return t;
    }
    t.points.push_back({s.n, s.W(), s.count()});
    if (keep_states) t.states.push_back(s);
  }
  t.stop = s.extinct() ? StopReason::extinct : StopReason::completed;
  return t;
}

WEstimate estimate_W(const Simulator& sim, std::size_t depth, std::size_t replicas, std::uint64_t seed,
                     unsigned workers) {
  const std::size_t half = depth / 2;
  auto one = [&](std::size_t i) {
    Engine rng = make_engine(seed, "estimate_W", i);
    GenerationState s = sim.root();
    ReplicaW r{1.0, 1.0, 0, StopReason::completed};
    for (std::size_t n = 0; n < depth; ++n) {
      try {
        s = sim.step(s, rng);
      } catch (const PopulationCapExceeded&) {
        r.stop = StopReason::cap_exceeded;
        if (r.depth < half) r.w_half = r.w_hat;
        return r;
      }
      r.depth = s.n;
      r.w_hat = s.W();
      if (s.n == half) r.w_half = r.w_hat;
      if (s.extinct()) {
        r.stop = StopReason::extinct;
        r.w_hat = 0.0;
        r.w_half = s.n <= half ? 0.0 : r.w_half;
        r.depth = depth;
        return r;
      }
    }
    if (half == 0) r.w_half = 1.0;
    return r;
  };
  WEstimate e;
  e.replicas = parallel_map(replicas, workers, one);
  std::vector<double> w, diff;
  w.reserve(replicas);
  diff.reserve(replicas);
  for (const auto& r : e.replicas) {
    w.push_back(r.w_hat);
    diff.push_back(r.w_hat - r.w_half);
    if (r.stop == StopReason::cap_exceeded) ++e.cap_hits;
    if (r.stop == StopReason::extinct) ++e.extinct;
  }
  e.mean = mean_se(w);
  e.proxy_error = mean_se(diff).sd;
  return e;
}

std::vector<QSums> q_sums(std::span<const GenerationState> gens, const RegVarFn& b, std::span<const double> xs) {
  std::vector<QSums> out;
  for (double x : xs) out.push_back({x});
  std::vector<double> tail_q(xs.size(), 0.0), tail_qh(xs.size(), 0.0);
  std::size_t used = 0;
  for (const auto& g : gens) if (g.n >= 1) ++used;
  std::size_t seen = 0;
  std::vector<Atom> atoms;
  std::vector<double> prefix;
  for (const auto& g : gens) {
    if (g.n < 1) continue;
    ++seen;
    atoms = g.atoms;
    std::sort(atoms.begin(), atoms.end(), [](const Atom& p, const Atom& q) { return p.weight > q.weight; });
    prefix.assign(atoms.size() + 1, 0.0);
    for (std::size_t i = 0; i < atoms.size(); ++i) prefix[i + 1] = prefix[i] + atoms[i].weight * atoms[i].multiplicity;
    const double bn = b(static_cast<double>(g.n));
    auto mass_above = [&](double t) {
      auto it = std::partition_point(atoms.begin(), atoms.end(), [t](const Atom& a) { return a.weight > t; });
      return prefix[static_cast<std::size_t>(it - atoms.begin())];
    };
    for (std::size_t j = 0; j < xs.size(); ++j) {
      double t = std::exp(-xs[j]);
      double dq = bn * mass_above(t);
      double dqh = bn * mass_above(t / bn);
      out[j].q += dq;
      out[j].q_hat += dqh;
      if (seen + 3 > used) {
        tail_q[j] += dq;
        tail_qh[j] += dqh;
      }
    }
  }
  for (std::size_t j = 0; j < xs.size(); ++j)
    out[j].certified = used >= 3 && tail_q[j] <= 1e-6 * out[j].q && tail_qh[j] <= 1e-6 * out[j].q_hat;
  return out;
}

std::size_t q_sum_depth(double x, double mu_hat, double safety) {
  if (!(mu_hat > 0.0)) throw DomainError("q_sum_depth needs mu > 0");
  return static_cast<std::size_t>(std::ceil((x + safety) / (0.75 * mu_hat)));
}

}  // namespace brwlab
