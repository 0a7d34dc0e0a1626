#include "brwlab/perpetuity.hpp"

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

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

struct Draw {
  double m, log_abs_m;
  double q, log_abs_q;
};

// Pair number k >= 1.
Draw draw_pair(const PerpetuitySpec& s, std::size_t k, Engine& rng) {
  Draw d{};
  std::visit(overloaded{
                 [&](const ConstM& c) { d.m = c.value; d.log_abs_m = std::log(std::fabs(c.value)); },
                 [&](const ExpM& e) {
                   double E = std::exponential_distribution<double>(e.rate)(rng);
                   d.m = std::exp(-E);
                   d.log_abs_m = -E;
                 },
                 [&](const UniformM& u) {
                   d.m = u.lo + (u.hi - u.lo) * uniform_open(rng);
                   d.log_abs_m = std::log(d.m);
                 },
                 [&](const CycleM& c) {
                   d.m = c.values[(k - 1) % c.values.size()];
                   d.log_abs_m = std::log(std::fabs(d.m));
                 },
             },
             s.m);
  std::visit(overloaded{
                 [&](const ConstQ& c) { d.q = c.value; d.log_abs_q = std::log(std::fabs(c.value)); },
                 [&](const LogParetoQ& p) {
                   double V = p.scale * std::pow(uniform_open(rng), -1.0 / p.index);
                   d.q = std::exp(V);
                   d.log_abs_q = V;
                 },
                 [&](const CoupledQ& c) {
                   double noise = c.noise_sd > 0.0 ? std::normal_distribution<double>(0.0, 1.0)(rng) : 0.0;
                   d.q = c.intercept + c.slope * d.m + c.noise_sd * noise;
                   d.log_abs_q = std::log(std::fabs(d.q));
                 },
             },
             s.q);
  return d;
}

double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::fabs(a - b)));
}

}  // namespace

std::string describe(const PerpetuitySpec& s) {
  std::string m = std::visit(overloaded{
                                 [](const ConstM& c) { return "const(" + num(c.value) + ")"; },
                                 [](const ExpM& e) { return "exp_neg(" + num(e.rate) + ")"; },
                                 [](const UniformM& u) { return "uniform(" + num(u.lo) + "," + num(u.hi) + ")"; },
                                 [](const CycleM& c) {
                                   std::string t = "cycle(";
                                   for (std::size_t i = 0; i < c.values.size(); ++i) t += (i ? "," : "") + num(c.values[i]);
                                   return t + ")";
                                 },
                             },
                             s.m);
  std::string q = std::visit(overloaded{
                                 [](const ConstQ& c) { return "const(" + num(c.value) + ")"; },
                                 [](const LogParetoQ& p) { return "log_pareto(" + num(p.index) + "," + num(p.scale) + ")"; },
                                 [](const CoupledQ& c) {
                                   return "coupled(" + num(c.intercept) + "," + num(c.slope) + "," + num(c.noise_sd) + ")";
                                 },
                             },
                             s.q);
  return "M=" + m + " Q=" + q;
}

double mean_log_abs_m(const MLaw& m) {
  return std::visit(overloaded{
                        [](const ConstM& c) { return std::log(std::fabs(c.value)); },
                        [](const ExpM& e) { return -1.0 / e.rate; },
                        [](const UniformM& u) {
                          return (xlogx(u.hi) - u.hi - xlogx(u.lo) + u.lo) / (u.hi - u.lo);
                        },
                        [](const CycleM& c) {
                          double s = 0.0;
                          for (double v : c.values) s += std::log(std::fabs(v));
                          return s / static_cast<double>(c.values.size());
                        },
                    },
                    m);
}

double mean_abs_m(const MLaw& m) {
  return std::visit(overloaded{
                        [](const ConstM& c) { return std::fabs(c.value); },
                        [](const ExpM& e) { return e.rate / (e.rate + 1.0); },
                        [](const UniformM& u) { return 0.5 * (u.lo + u.hi); },
                        [](const CycleM& c) {
                          double s = 0.0;
                          for (double v : c.values) s += std::fabs(v);
                          return s / static_cast<double>(c.values.size());
                        },
                    },
                    m);
}

double mean_abs_q(const QLaw& q, const MLaw& m) {
  return std::visit(overloaded{
                        [](const ConstQ& c) { return std::fabs(c.value); },
                        [](const LogParetoQ&) { return kInf; },
                        [&](const CoupledQ& c) {
                          return std::fabs(c.intercept) + std::fabs(c.slope) * mean_abs_m(m) +
                                 c.noise_sd * std::sqrt(2.0 / M_PI);
                        },
                    },
                    q);
}

bool nonnegative(const PerpetuitySpec& s) {
  bool m_pos = std::visit(overloaded{
                              [](const ConstM& c) { return c.value > 0.0; },
                              [](const ExpM&) { return true; },
                              [](const UniformM&) { return true; },
                              [](const CycleM& c) {
                                return std::all_of(c.values.begin(), c.values.end(), [](double v) { return v > 0.0; });
                              },
                          },
                          s.m);
  bool q_pos = std::visit(overloaded{
                              [](const ConstQ& c) { return c.value > 0.0; },
                              [](const LogParetoQ&) { return true; },
                              [](const CoupledQ& c) { return c.noise_sd == 0.0 && c.intercept >= 0.0 && c.slope >= 0.0; },
                          },
                          s.q);
  return m_pos && q_pos;
}

void validate(const PerpetuitySpec& s) {
  std::visit(overloaded{
                 [](const ConstM& c) {
                   if (c.value == 0.0 || !std::isfinite(c.value)) throw ConfigError("M must satisfy P{M = 0} = 0");
                 },
                 [](const ExpM& e) {
                   if (!(e.rate > 0.0) || !std::isfinite(e.rate)) throw ConfigError("exp_neg M needs rate > 0");
                 },
                 [](const UniformM& u) {
                   if (!(u.lo >= 0.0) || !(u.hi > u.lo) || !std::isfinite(u.hi))
                     throw ConfigError("uniform M needs 0 <= lo < hi");
                 },
                 [](const CycleM& c) {
                   if (c.values.empty()) throw ConfigError("cycle M needs values");
                   for (double v : c.values)
                     if (v == 0.0 || !std::isfinite(v)) throw ConfigError("cycle M values must be finite and non-zero");
                 },
             },
             s.m);
  std::visit(overloaded{
                 [](const ConstQ& c) {
                   if (c.value == 0.0) throw ConfigError("Q = 0 a.s. makes Z_inf degenerate");
                   if (!std::isfinite(c.value)) throw ConfigError("Q must be finite");
                 },
                 [](const LogParetoQ& p) {
                   if (!(p.scale > 0.0)) throw ConfigError("log_pareto Q needs scale > 0");
                   if (!(p.index > 1.0)) throw ConfigError("log_pareto Q needs index > 1 so that E log+ Q < inf");
                 },
                 [](const CoupledQ& c) {
                   if (!std::isfinite(c.intercept) || !std::isfinite(c.slope) || !(c.noise_sd >= 0.0))
                     throw ConfigError("coupled Q needs finite coefficients and noise_sd >= 0");
                   if (c.intercept == 0.0 && c.slope == 0.0 && c.noise_sd == 0.0)
                     throw ConfigError("Q = 0 a.s. makes Z_inf degenerate");
                 },
             },
             s.q);
  double elm = mean_log_abs_m(s.m);
  if (!(elm < 0.0)) throw ConfigError("contraction fails: E log|M| = " + num(elm) + " is not negative");
}

PathPair sample_path(const PerpetuitySpec& s, std::size_t n, Engine& rng) {
  PathPair p;
  p.m.reserve(n);
  p.q.reserve(n);
  for (std::size_t k = 1; k <= n; ++k) {
    auto d = draw_pair(s, k, rng);
    p.m.push_back(d.m);
    p.q.push_back(d.q);
  }
  return p;
}

ZSample sample_Z(const PerpetuitySpec& s, Engine& rng, const ZOptions& opt) {
  const double eq = mean_abs_q(s.q, s.m);
  const double em = mean_abs_m(s.m);
  const double scale = std::isfinite(eq) && eq > 0.0 ? eq : 1.0;
  const double log_stop = std::log(opt.tol * scale);
  const bool logspace = nonnegative(s);
  const auto* heavy = std::get_if<LogParetoQ>(&s.q);
  if (!logspace) heavy = nullptr;
  const double mu = -mean_log_abs_m(s.m);
  double log_pi = 0.0, sign_pi = 1.0, log_z = -kInf;
  NeumaierSum z;
  for (std::size_t k = 1; k <= opt.horizon_cap; ++k) {
    auto d = draw_pair(s, k, rng);
    if (logspace) {
      log_z = log_add(log_z, log_pi + d.log_abs_q);
    } else {
      z.add(sign_pi * std::exp(log_pi) * d.q);
      if (d.m < 0.0) sign_pi = -sign_pi;
    }
    log_pi += d.log_abs_m;
    if (log_pi < log_stop && (!heavy || log_z - log_pi >= opt.heavy_window)) {
      ZSample out{};
      if (heavy) {
        // A later term e^{log Pi + V} reaches log Z + y with probability about
        // scale^a (D + y)^{1-a} / ((a - 1) mu), D = log Z - log Pi.
        const double a = heavy->index;
        for (;;) {
          double D = log_z - log_pi;
          double p = std::pow(heavy->scale, a) * std::pow(D, 1.0 - a) / ((a - 1.0) * mu);
          if (uniform01(rng) >= std::min(1.0, p)) break;
          double y = D * (std::pow(uniform_open(rng), -1.0 / (a - 1.0)) - 1.0);
          log_z = log_add(log_z, log_z + y);
          ++out.completions;
        }
      }
      out.terms = k;
      out.log_abs_pi = log_pi;
      if (logspace) {
        out.log_abs = log_z;
        out.value = std::exp(log_z);
      } else {
        out.value = z.value();
        out.log_abs = std::log(std::fabs(out.value));
      }
      out.bounded = std::isfinite(eq) && em < 1.0;
      out.remainder_bound = out.bounded ? std::exp(log_pi) * eq / (1.0 - em) / 0.01 : kInf;
      return out;
    }
  }
  throw HorizonExceeded("|Pi_k| did not fall below tol within " + std::to_string(opt.horizon_cap) + " steps");
}

std::vector<ZSample> sample_Z_many(const PerpetuitySpec& s, std::size_t replicas, std::uint64_t seed,
                                   const ZOptions& opt, unsigned workers, std::string_view stream) {
  validate(s);
  return parallel_map(replicas, workers, [&](std::size_t i) {
    Engine rng = make_engine(seed, stream, i);
    return sample_Z(s, rng, opt);
  });
}

std::vector<double> log_abs_products(std::span<const double> m) {
  std::vector<double> out{0.0};
  out.reserve(m.size() + 1);
  double acc = 0.0;
  for (double v : m) {
    acc += std::log(std::fabs(v));
    out.push_back(acc);
  }
  return out;
}

std::vector<std::size_t> ladder_epochs(std::span<const double> log_abs_pi, std::size_t count) {
  std::vector<std::size_t> out;
  if (log_abs_pi.empty()) throw DomainError("ladder_epochs needs a path");
  double record = log_abs_pi[0];
  for (std::size_t n = 1; n < log_abs_pi.size() && out.size() < count; ++n) {
    if (log_abs_pi[n] < record) {
      out.push_back(n);
      record = log_abs_pi[n];
    }
  }
  if (out.size() < count)
    throw DomainError("path exhausted after " + std::to_string(out.size()) + " of " + std::to_string(count) +
                      " ladder epochs");
  return out;
}

std::vector<std::size_t> all_ladder_epochs(std::span<const double> log_abs_pi) {
  std::vector<std::size_t> out;
  if (log_abs_pi.empty()) throw DomainError("ladder_epochs needs a path");
  double record = log_abs_pi[0];
  for (std::size_t n = 1; n < log_abs_pi.size(); ++n) {
    if (log_abs_pi[n] < record) {
      out.push_back(n);
      record = log_abs_pi[n];
    }
  }
  return out;
}

double BlockDecomposition::rel_error() const {
  double scale = std::max(std::fabs(direct), std::fabs(blocked));
  return scale > 0.0 ? std::fabs(direct - blocked) / scale : 0.0;
}

BlockDecomposition block_decompose(const PathPair& path, std::span<const std::size_t> epochs) {
  BlockDecomposition out;
  const std::size_t n = path.m.size();
  std::size_t prev = 0;
  for (std::size_t e : epochs) {
    if (e <= prev || e > n) throw DomainError("epochs must increase within the path");
    Block b{1.0, 0.0};
    NeumaierSum q;
    for (std::size_t j = prev + 1; j <= e; ++j) {
      q.add(b.m * std::fabs(path.q[j - 1]));
      b.m *= std::fabs(path.m[j - 1]);
    }
    b.q = q.value();
    out.blocks.push_back(b);
    prev = e;
  }
  out.covered = prev;
  out.trailing_incomplete = prev < n;
  NeumaierSum direct, blocked;
  double pi = 1.0;
  for (std::size_t j = 1; j <= prev; ++j) {
    direct.add(pi * std::fabs(path.q[j - 1]));
    pi *= std::fabs(path.m[j - 1]);
  }
  double pib = 1.0;
  for (const auto& b : out.blocks) {
    blocked.add(pib * b.q);
    pib *= b.m;
  }
  out.direct = direct.value();
  out.blocked = blocked.value();
  return out;
}

EpochStats first_epoch_stats(const PerpetuitySpec& s, std::size_t replicas, std::uint64_t seed, std::size_t max_len,
                             unsigned workers) {
  validate(s);
  auto n1 = parallel_map(replicas, workers, [&](std::size_t i) {
    Engine rng = make_engine(seed, "first_epoch", i);
    double acc = 0.0;
    for (std::size_t k = 1; k <= max_len; ++k) {
      acc += draw_pair(s, k, rng).log_abs_m;
      if (acc < 0.0) return static_cast<double>(k);
    }
    return -1.0;
  });
  EpochStats out;
  for (double v : n1) {
    if (v < 0.0) {
      ++out.exhausted;
      v = static_cast<double>(max_len);
    }
    out.first_epoch.push_back(v);
  }
  out.diagnostic = truncated_moment("E N_1", out.first_epoch);
  return out;
}

PerpetuityMoments perpetuity_moments(const PerpetuitySpec& s, const RegVarFn& b, std::size_t replicas,
                                     std::uint64_t seed, const ZOptions& opt, unsigned workers,
                                     const TruncationOptions& topt) {
  const RegVarFn c = derive_c(b);
  auto zs = sample_Z_many(s, replicas, seed, opt, workers);
  std::vector<double> zb, mc, qc;
  zb.reserve(replicas);
  for (const auto& z : zs) zb.push_back(b.at_positive(z.log_abs));
  for (std::size_t i = 0; i < replicas; ++i) {
    Engine rng = make_engine(seed, "perpetuity_mq", i);
    auto d = draw_pair(s, 1 + i, rng);
    mc.push_back(c.at_positive(d.log_abs_m));
    qc.push_back(c.at_positive(d.log_abs_q));
  }
  return {truncated_moment("E b(log+|Z|)", zb, topt), truncated_moment("E c(log+|M|)", mc, topt),
          truncated_moment("E c(log+|Q|)", qc, topt)};
}

}  // namespace brwlab
