#include "brwlab/walkrenew.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "brwlab/error.hpp"
#include "brwlab/parallel.hpp"
#include "brwlab/stats.hpp"

namespace brwlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::uint64_t kUnresolved = std::numeric_limits<std::uint64_t>::max();

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double log_sum_exp2(double la, double lb) {
  double m = std::max(la, lb);
  if (m == -kInf) return -kInf;
  return m + std::log(std::exp(la - m) + std::exp(lb - m));
}

double pareto_lower_mgf(const ParetoStep& p, double theta) {
  // E e^{theta P} for theta < 0 with P = scale * u^{-1/index}.
  auto f = [&](double u) { return u <= 0.0 ? 0.0 : std::exp(theta * p.scale * std::pow(u, -1.0 / p.index)); };
  return adaptive_simpson(f, 0.0, 1.0, 1e-15);
}

bool le_tol(double lhs, double rhs) { return lhs <= rhs + 1e-12 * std::max(1.0, std::fabs(rhs)); }

double support_max(const StepLaw& s) {
  return std::visit(overloaded{
                        [](const NormalStep& n) { return n.sd == 0.0 ? n.mean : kInf; },
                        [](const ShiftedExpStep&) { return kInf; },
                        [](const TwoPointStep& t) {
                          double m = -kInf;
                          if (t.prob_a > 0.0) m = std::max(m, t.a);
                          if (t.prob_a < 1.0) m = std::max(m, t.b);
                          return m;
                        },
                        [](const ConstantStep& c) { return c.value; },
                        [](const EmpiricalStep& e) {
                          double m = -kInf;
                          for (std::size_t i = 0; i < e.values.size(); ++i)
                            if (e.weights[i] > 0.0) m = std::max(m, e.values[i]);
                          return m;
                        },
                        [](const ParetoStep&) { return kInf; },
                    },
                    s);
}

// P{S_n <= y} in the walk's CDF mode.
Estimate prob_le(const WalkSpec& w, std::uint64_t n, double y) {
  if (w.cdf_mode == CdfMode::exact) return {cdf_n(w.step, n, y), 0.0, 0, true};
  return mc_cdf_n(w.step, n, y, w.mc_replicas, w.seed);
}

}  // namespace

std::string describe(const StepLaw& s) {
  return std::visit(overloaded{
                        [](const NormalStep& n) { return "normal(" + num(n.mean) + "," + num(n.sd) + ")"; },
                        [](const ShiftedExpStep& e) { return "exp(" + num(e.rate) + ")-" + num(e.shift); },
                        [](const TwoPointStep& t) {
                          return "two_point(" + num(t.a) + "," + num(t.b) + "," + num(t.prob_a) + ")";
                        },
                        [](const ConstantStep& c) { return "constant(" + num(c.value) + ")"; },
                        [](const EmpiricalStep& e) { return "empirical(" + std::to_string(e.values.size()) + ")"; },
                        [](const ParetoStep& p) {
                          return "pareto(" + num(p.index) + "," + num(p.scale) + ")-" + num(p.shift);
                        },
                    },
                    s);
}

double step_mean(const StepLaw& s) {
  return std::visit(overloaded{
                        [](const NormalStep& n) { return n.mean; },
                        [](const ShiftedExpStep& e) { return 1.0 / e.rate - e.shift; },
                        [](const TwoPointStep& t) { return t.prob_a * t.a + (1.0 - t.prob_a) * t.b; },
                        [](const ConstantStep& c) { return c.value; },
                        [](const EmpiricalStep& e) {
                          NeumaierSum s, w;
                          for (std::size_t i = 0; i < e.values.size(); ++i) {
                            s.add(e.weights[i] * e.values[i]);
                            w.add(e.weights[i]);
                          }
                          return s.value() / w.value();
                        },
                        [](const ParetoStep& p) {
                          return p.index > 1.0 ? p.index * p.scale / (p.index - 1.0) - p.shift : kInf;
                        },
                    },
                    s);
}

double step_variance(const StepLaw& s) {
  return std::visit(overloaded{
                        [](const NormalStep& n) { return n.sd * n.sd; },
                        [](const ShiftedExpStep& e) { return 1.0 / (e.rate * e.rate); },
                        [](const TwoPointStep& t) { return t.prob_a * (1.0 - t.prob_a) * (t.a - t.b) * (t.a - t.b); },
                        [](const ConstantStep&) { return 0.0; },
                        [&](const EmpiricalStep& e) {
                          double m = step_mean(s);
                          NeumaierSum v, w;
                          for (std::size_t i = 0; i < e.values.size(); ++i) {
                            v.add(e.weights[i] * (e.values[i] - m) * (e.values[i] - m));
                            w.add(e.weights[i]);
                          }
                          return v.value() / w.value();
                        },
                        [](const ParetoStep& p) {
                          if (p.index <= 2.0) return kInf;
                          double a = p.index;
                          return p.scale * p.scale * a / ((a - 1.0) * (a - 1.0) * (a - 2.0));
                        },
                    },
                    s);
}

bool has_exact_cdf(const StepLaw& s) {
  return std::holds_alternative<NormalStep>(s) || std::holds_alternative<ShiftedExpStep>(s) ||
         std::holds_alternative<TwoPointStep>(s) || std::holds_alternative<ConstantStep>(s);
}

double log_mgf(const StepLaw& s, double theta) {
  if (theta == 0.0) return 0.0;
  return std::visit(overloaded{
                        [&](const NormalStep& n) { return theta * n.mean + 0.5 * theta * theta * n.sd * n.sd; },
                        [&](const ShiftedExpStep& e) {
                          if (theta >= e.rate) return kInf;
                          return std::log(e.rate / (e.rate - theta)) - theta * e.shift;
                        },
                        [&](const TwoPointStep& t) {
                          double la = t.prob_a > 0.0 ? std::log(t.prob_a) + theta * t.a : -kInf;
                          double lb = t.prob_a < 1.0 ? std::log1p(-t.prob_a) + theta * t.b : -kInf;
                          return log_sum_exp2(la, lb);
                        },
                        [&](const ConstantStep& c) { return theta * c.value; },
                        [&](const EmpiricalStep& e) {
                          double m = -kInf, wsum = 0.0;
                          for (std::size_t i = 0; i < e.values.size(); ++i) {
                            if (e.weights[i] > 0.0) m = std::max(m, theta * e.values[i]);
                            wsum += e.weights[i];
                          }
                          NeumaierSum acc;
                          for (std::size_t i = 0; i < e.values.size(); ++i)
                            if (e.weights[i] > 0.0) acc.add(e.weights[i] * std::exp(theta * e.values[i] - m));
                          return m + std::log(acc.value() / wsum);
                        },
                        [&](const ParetoStep& p) {
                          if (theta > 0.0) return kInf;
                          return std::log(pareto_lower_mgf(p, theta)) - theta * p.shift;
                        },
                    },
                    s);
}

void validate(const WalkSpec& w) {
  std::visit(overloaded{
                 [](const NormalStep& n) {
                   if (!std::isfinite(n.mean) || !(n.sd >= 0.0) || !std::isfinite(n.sd))
                     throw ConfigError("normal step needs finite mean and sd >= 0");
                 },
                 [](const ShiftedExpStep& e) {
                   if (!(e.rate > 0.0) || !std::isfinite(e.rate) || !std::isfinite(e.shift))
                     throw ConfigError("exp step needs rate > 0 and a finite shift");
                 },
                 [](const TwoPointStep& t) {
                   if (!std::isfinite(t.a) || !std::isfinite(t.b) || !(t.prob_a >= 0.0 && t.prob_a <= 1.0))
                     throw ConfigError("two_point step needs finite atoms and prob_a in [0, 1]");
                 },
                 [](const ConstantStep& c) {
                   if (!std::isfinite(c.value)) throw ConfigError("constant step must be finite");
                 },
                 [](const EmpiricalStep& e) {
                   if (e.values.empty() || e.values.size() != e.weights.size())
                     throw ConfigError("empirical step needs matching non-empty values and weights");
                   double total = 0.0;
                   for (std::size_t i = 0; i < e.values.size(); ++i) {
                     if (!std::isfinite(e.values[i]) || !(e.weights[i] >= 0.0) || !std::isfinite(e.weights[i]))
                       throw ConfigError("empirical step needs finite values and weights >= 0");
                     total += e.weights[i];
                   }
                   if (!(total > 0.0)) throw ConfigError("empirical step weights sum to zero");
                 },
                 [](const ParetoStep& p) {
                   if (!(p.index > 0.0) || !(p.scale > 0.0) || !std::isfinite(p.shift))
                     throw ConfigError("pareto step needs index > 0, scale > 0 and a finite shift");
                 },
             },
             w.step);
  if (w.cdf_mode == CdfMode::exact && !has_exact_cdf(w.step))
    throw ConfigError("step law " + describe(w.step) + " has no closed n-step CDF; use cdf_mode monte_carlo");
  if (w.cdf_mode == CdfMode::monte_carlo && w.mc_replicas < 1) throw ConfigError("mc_replicas must be >= 1");
}

EmpiricalStep empirical_from_log_Z(const WeightedLogZ& d) {
  EmpiricalStep e;
  e.values.reserve(d.log_z.size());
  for (double lz : d.log_z) e.values.push_back(-lz);
  e.weights = d.weight;
  return e;
}

StepSampler::StepSampler(StepLaw s) : law_(std::move(s)) {
  if (auto* e = std::get_if<EmpiricalStep>(&law_)) {
    cumulative_.resize(e->weights.size());
    std::partial_sum(e->weights.begin(), e->weights.end(), cumulative_.begin());
  }
}

double StepSampler::operator()(Engine& rng) const {
  return std::visit(overloaded{
                        [&](const NormalStep& n) {
                          return n.sd == 0.0 ? n.mean : std::normal_distribution<double>(n.mean, n.sd)(rng);
                        },
                        [&](const ShiftedExpStep& e) {
                          return std::exponential_distribution<double>(e.rate)(rng) - e.shift;
                        },
                        [&](const TwoPointStep& t) { return uniform01(rng) < t.prob_a ? t.a : t.b; },
                        [&](const ConstantStep& c) { return c.value; },
                        [&](const EmpiricalStep& e) {
                          double u = uniform01(rng) * cumulative_.back();
                          auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
                          std::size_t i = std::min<std::size_t>(it - cumulative_.begin(), e.values.size() - 1);
                          return e.values[i];
                        },
                        [&](const ParetoStep& p) {
                          return p.scale * std::pow(uniform_open(rng), -1.0 / p.index) - p.shift;
                        },
                    },
                    law_);
}

double cdf_n(const StepLaw& s, std::uint64_t n, double y) {
  const double nd = static_cast<double>(n);
  if (n == 0) return y >= 0.0 ? 1.0 : 0.0;
  return std::visit(
      overloaded{
          [&](const NormalStep& st) {
            if (st.sd == 0.0) return le_tol(nd * st.mean, y) ? 1.0 : 0.0;
            return norm_cdf((y - nd * st.mean) / (st.sd * std::sqrt(nd)));
          },
          [&](const ShiftedExpStep& e) {
            double t = e.rate * (y + nd * e.shift);
            return t <= 0.0 ? 0.0 : boost::math::gamma_p(nd, t);
          },
          [&](const TwoPointStep& t) {
            double hi = std::max(t.a, t.b), lo = std::min(t.a, t.b);
            if (hi == lo) return le_tol(nd * hi, y) ? 1.0 : 0.0;
            double p_hi = t.a >= t.b ? t.prob_a : 1.0 - t.prob_a;
            double kf = (y - nd * lo) / (hi - lo);
            double k = std::floor(kf + 1e-12 * std::max(1.0, std::fabs(kf)));
            if (k < 0.0) return 0.0;
            if (k >= nd) return 1.0;
            if (p_hi <= 0.0) return 1.0;
            if (p_hi >= 1.0) return 0.0;
            return boost::math::cdf(boost::math::binomial_distribution<double>(nd, p_hi), k);
          },
          [&](const ConstantStep& c) { return le_tol(nd * c.value, y) ? 1.0 : 0.0; },
          [&](const EmpiricalStep&) -> double { throw DomainError("empirical steps have no closed n-step CDF"); },
          [&](const ParetoStep&) -> double { throw DomainError("pareto steps have no closed n-step CDF"); },
      },
      s);
}

Estimate mc_cdf_n(const StepLaw& s, std::uint64_t n, double y, std::size_t replicas, std::uint64_t seed) {
  StepSampler draw(s);
  std::vector<double> hit(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    Engine rng = make_engine(seed, "mc_cdf", r);
    double S = 0.0;
    for (std::uint64_t k = 0; k < n; ++k) S += draw(rng);
    hit[r] = S <= y ? 1.0 : 0.0;
  }
  auto ms = mean_se(hit);
  return {ms.mean, ms.se, replicas, false};
}

ChernoffRate chernoff_rate(const StepLaw& s, double a, Side side) {
  auto obj = [&](double th) {
    double v = side == Side::above ? th * a - log_mgf(s, th) : -th * a - log_mgf(s, -th);
    return std::isfinite(v) ? v : -1e300;
  };
  double hi = 1.0;
  while (obj(hi) <= -1e299 && hi > 1e-12) hi *= 0.5;
  if (obj(hi) <= -1e299) return {0.0, 0.0};
  while (hi < 1e6 && obj(2.0 * hi) > obj(hi)) hi *= 2.0;
  auto best = golden_max(obj, 0.0, std::min(2.0 * hi, 2e6));
  if (!(best.value > 0.0)) return {0.0, 0.0};
  return {best.value, best.x};
}

VValue renewal_V_log(const WalkSpec& walk, const RegVarFn& b, double log_x, double tol) {
  validate(walk);
  const double mu = step_mean(walk.step);
  if (!(mu > 0.0)) throw DomainError("renewal function needs a positive drift, got " + num(mu));
  auto cr = chernoff_rate(walk.step, 0.0, Side::below);
  if (!(cr.rate > 0.0) || !std::isfinite(cr.rate)) {
    // Chebyshev gives b(n) Var / (n mu^2) per term, summable only for b of negative index.
    throw TailBoundUnavailable("no Chernoff bound for the lower tail of " + describe(walk.step) +
                               " and the Chebyshev bound is not summable for " + b.describe());
  }
  const double th = cr.theta, I = cr.rate;
  auto log_bn = [&](std::uint64_t n) { return std::log(b(static_cast<double>(n))); };
  auto bound_term = [&](std::uint64_t n) {
    double lb = log_bn(n);
    return std::exp(lb + th * (lb + log_x) - static_cast<double>(n) * I);
  };

  VValue out;
  out.exact = walk.cdf_mode == CdfMode::exact;
  NeumaierSum sum;
  std::vector<double> c;  // thresholds log b(n) + log x, kept for the MC pass
  for (std::uint64_t n = 1;; ++n) {
    double cn = log_bn(n) + log_x;
    c.push_back(cn);
    if (out.exact) sum.add(b(static_cast<double>(n)) * cdf_n(walk.step, n, cn));
    bool past_mean = static_cast<double>(n) * mu > cn;
    if (past_mean && (n % 4 == 0)) {
      auto tail = geometric_tail_sum(bound_term, n + 1);
      if (tail.converged && tail.value < tol) {
        out.terms = n;
        out.tail_bound = tail.value;
        break;
      }
    }
    if (n >= 100'000'000) throw TailBoundUnavailable("renewal sum did not reach tolerance by n = 1e8");
  }
  if (out.exact) {
    out.value = sum.value();
    return out;
  }
  StepSampler draw(walk.step);
  std::vector<double> v(walk.mc_replicas);
  for (std::size_t r = 0; r < walk.mc_replicas; ++r) {
    Engine rng = make_engine(walk.seed, "renewal_V", r);
    double S = 0.0;
    NeumaierSum acc;
    for (std::uint64_t n = 1; n <= out.terms; ++n) {
      S += draw(rng);
      if (S <= c[n - 1]) acc.add(b(static_cast<double>(n)));
    }
    v[r] = acc.value();
  }
  auto ms = mean_se(v);
  out.value = ms.mean;
  out.se = ms.se;
  return out;
}

VValue renewal_V(const WalkSpec& walk, const RegVarFn& b, double x, double tol) {
  if (!(x > 0.0)) throw DomainError("renewal_V needs x > 0");
  return renewal_V_log(walk, b, std::log(x), tol);
}

RenewalTable RenewalTable::build(const WalkSpec& walk, const RegVarFn& b, const RenewalOptions& opt) {
  if (!(opt.ratio > 1.0) || !(opt.log_hi > opt.log_lo) || !(opt.head >= 0.0))
    throw DomainError("renewal grid needs ratio > 1 and log_hi > log_lo");
  RenewalTable t(walk, b, opt);
  t.mu_ = step_mean(walk.step);
  const double h0 = std::log(opt.ratio);
  const auto up = static_cast<std::size_t>(std::ceil((opt.log_hi - opt.log_lo) / h0 - 1e-9));
  const double h = (opt.log_hi - opt.log_lo) / static_cast<double>(up);
  const auto down = static_cast<std::size_t>(std::ceil(opt.head / h - 1e-9));
  const std::size_t count = up + down + 1;
  std::vector<double> lx(count);
  for (std::size_t i = 0; i < count; ++i)
    lx[i] = opt.log_lo + (static_cast<double>(i) - static_cast<double>(down)) * h;
  lx.back() = opt.log_hi;

  auto vals = parallel_map(count, opt.workers, [&](std::size_t i) { return renewal_V_log(walk, b, lx[i], opt.tol); });

  // M beyond the grid: dV ~ mu^{-beta-1} b(log y) dy / y.
  const double beta = b.exponent();
  const double T = opt.log_hi;
  auto tail_f = [&](double s) { return std::exp(-s) * b(s); };
  t.m_tail_ = std::pow(t.mu_, -beta - 1.0) *
              adaptive_simpson(tail_f, T, T + 200.0, 1e-13 * tail_f(T));

  t.rows_.resize(count);
  const double eh = std::exp(h);
  const double k_seg = (h - 1.0) * eh + 1.0;         // int_0^h e^s s ds
  const double m_seg = 1.0 - (1.0 + h) * std::exp(-h);  // int_0^h e^{-s} s ds
  double integral_V = 0.0, k_stj = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    auto& r = t.rows_[i];
    r.log_x = lx[i];
    r.V = vals[i].value;
    r.terms = vals[i].terms;
    r.tail_bound = vals[i].tail_bound;
    if (i > 0) {
      double Vj = vals[i - 1].value, dV = r.V - Vj, s = dV / h, l = lx[i - 1];
      integral_V += std::exp(l) * (Vj * (eh - 1.0) + s * k_seg);
      k_stj += dV * std::exp(l + 0.5 * h);
    }
    r.K = std::exp(lx[i]) * r.V - integral_V;
    r.K_stieltjes = k_stj;
  }
  double integral_Vy2 = 0.0, m_stj = 0.0;
  const double VX = vals.back().value;
  for (std::size_t i = count; i-- > 0;) {
    auto& r = t.rows_[i];
    if (i + 1 < count) {
      double Vj = r.V, dV = vals[i + 1].value - Vj, s = dV / h, l = lx[i];
      integral_Vy2 += std::exp(-l) * (Vj * (1.0 - std::exp(-h)) + s * m_seg);
      m_stj += dV * std::exp(-l - 0.5 * h);
    }
    r.M = -r.V * std::exp(-lx[i]) + integral_Vy2 + VX * std::exp(-opt.log_hi) + t.m_tail_;
    r.M_stieltjes = m_stj + t.m_tail_;
  }
  for (const auto& r : t.rows_) {
    if (r.log_x < opt.log_lo - 1e-12) continue;
    auto off = [&](double a, double c) {
      double scale = std::max(std::fabs(a), std::fabs(c));
      return scale > 0.0 && std::fabs(a - c) > opt.form_tol * scale;
    };
    if (off(r.K, r.K_stieltjes) || off(r.M, r.M_stieltjes))
      throw GridResolutionError("K or M forms disagree by more than " + num(opt.form_tol) + " at log x = " +
                                num(r.log_x) + "; refine the grid ratio");
  }
  return t;
}

std::vector<RenewalRow> RenewalTable::exported() const {
  std::vector<RenewalRow> out;
  for (const auto& r : rows_)
    if (r.log_x >= opt_.log_lo - 1e-12) out.push_back(r);
  return out;
}

KM km_functions(const RenewalTable& t, double log_x) {
  const auto& rows = t.rows();
  if (log_x < rows.front().log_x - 1e-12 || log_x > rows.back().log_x + 1e-12)
    throw DomainError("log x = " + num(log_x) + " outside the renewal table");
  auto it = std::lower_bound(rows.begin(), rows.end(), log_x,
                             [](const RenewalRow& r, double v) { return r.log_x < v; });
  if (it == rows.begin()) return {it->K, it->M, true};
  if (it == rows.end()) --it;
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  double w = (log_x - lo.log_x) / (hi.log_x - lo.log_x);
  auto interp = [w](double a, double c) {
    if (a > 0.0 && c > 0.0) return std::exp((1.0 - w) * std::log(a) + w * std::log(c));
    return (1.0 - w) * a + w * c;
  };
  return {interp(lo.K, hi.K), interp(lo.M, hi.M), true};
}

double dehaan_increment(const RenewalTable& t, double log_x, double h) {
  if (!(h >= 1.0)) throw DomainError("dehaan_increment needs h >= 1");
  double log_hx = log_x + std::log(h);
  if (log_x < t.log_lo() - 1e-12 || log_hx > t.log_hi() + 1e-12)
    throw DomainError("dehaan_increment outside the grid range");
  if (h == 1.0) return 0.0;
  double v1 = renewal_V_log(t.walk(), t.b(), log_x, t.options().tol).value;
  double v2 = renewal_V_log(t.walk(), t.b(), log_hx, t.options().tol).value;
  double beta = t.b().exponent();
  return (v2 - v1) / (std::pow(t.mu(), -beta - 1.0) * t.b()(log_x));
}

DriftSeries drift_series(const WalkSpec& walk, const RegVarFn& phi, double eps, Side side, std::uint64_t N) {
  validate(walk);
  if (!(eps > 0.0)) throw DomainError("drift_series needs eps > 0");
  const double mu = step_mean(walk.step);
  const double a = side == Side::above ? mu + eps : mu - eps;
  DriftSeries out;
  NeumaierSum sum;
  for (std::uint64_t n = 1; n <= N; ++n) {
    double nd = static_cast<double>(n);
    double p = prob_le(walk, n, a * nd).value;
    if (side == Side::above) p = 1.0 - p;
    sum.add(phi(nd) * std::max(0.0, p));
    out.partial.push_back(sum.value());
  }
  auto cr = chernoff_rate(walk.step, a, side);
  if (cr.rate > 0.0) {
    double I = cr.rate;
    auto tail = geometric_tail_sum([&](std::uint64_t n) {
      double nd = static_cast<double>(n);
      return std::exp(std::log(phi(nd)) - nd * I);
    }, N + 1);
    if (tail.converged) {
      out.tail_bound = tail.value;
      out.certified = true;
    }
  }
  return out;
}

std::optional<double> cramer_root(const StepLaw& s) {
  double mu = step_mean(s);
  if (!(mu < 0.0)) throw DomainError("Cramer root needs a negative drift, got " + num(mu));
  if (support_max(s) <= 0.0) return kInf;
  if (auto* n = std::get_if<NormalStep>(&s)) return -2.0 * n->mean / (n->sd * n->sd);
  double probe = 1e-6;
  if (!std::isfinite(log_mgf(s, probe))) {
    return std::nullopt;
  }
  auto L = [&](double k) { return log_mgf(s, k); };
  double lo = probe, hi = 1.0;
  double fin = lo;  // largest theta known to have a finite transform
  for (int i = 0; i < 200; ++i) {
    double v = L(hi);
    if (!std::isfinite(v)) {
      hi = 0.5 * (fin + hi);
      continue;
    }
    if (v > 0.0) break;
    fin = hi;
    lo = hi;
    hi *= 2.0;
  }
  if (!(L(hi) > 0.0)) return std::nullopt;
  while (!(L(lo) < 0.0) && lo > 1e-300) lo *= 0.5;
  return find_root(L, lo, hi);
}

PassageRun passage_functionals(const WalkSpec& walk, std::span<const double> xs, std::size_t replicas,
                               std::uint64_t seed, const PassageOptions& opt) {
  validate(walk);
  PassageRun run;
  run.xs.assign(xs.begin(), xs.end());
  for (double x : xs)
    if (!(x >= 0.0)) throw DomainError("passage levels must be >= 0");
  auto kappa = cramer_root(walk.step);
  const ParetoStep* pareto = std::get_if<ParetoStep>(&walk.step);
  std::function<double(double)> complete;
  if (kappa && std::isinf(*kappa)) {
    run.window = 0.0;
    run.bias_bound = 0.0;
  } else if (kappa) {
    run.window = std::log(1.0 / opt.bias_tol) / *kappa;
    run.bias_bound = opt.bias_tol;
  } else {
    // Heavy right tail: P{sup of the walk from here > w} ~ int_w^inf P{X > t} dt / |mu|.
    run.window = opt.heavy_window;
    run.bias_certified = false;
    run.bias_bound = 1.0;
    double mu = -step_mean(walk.step);
    if (pareto && pareto->index > 1.0) {
      const ParetoStep p = *pareto;
      complete = [p, mu](double w) {
        return std::pow(p.scale, p.index) * std::pow(w + p.shift, 1.0 - p.index) / ((p.index - 1.0) * mu);
      };
      run.bias_bound = std::min(1.0, complete(run.window));
    }
  }
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  StepSampler draw(walk.step);
  const double window = run.window;
  run.samples = parallel_map(replicas, opt.workers, [&](std::size_t i) {
    Engine rng = make_engine(seed, "passage", i);
    PassageSample p{0.0, std::vector<std::uint64_t>(xs.size(), kUnresolved), std::vector<double>(xs.size(), 0.0), 0,
                    false};
    double S = 0.0, top = 0.0;
    std::size_t next = 0;
    for (std::uint64_t n = 1;; ++n) {
      if (n > opt.horizon) {
        p.horizon_hit = true;
        for (std::size_t k = next; k < order.size(); ++k) p.sup_before_tau[order[k]] = top;
        break;
      }
      S += draw(rng);
      p.steps = n;
      while (next < order.size() && S < -xs[order[next]]) {
        p.tau[order[next]] = n;
        p.sup_before_tau[order[next]] = top;
        ++next;
      }
      if (S > top) top = S;
      if (next == order.size() && top - S >= window) {
        if (!complete) break;
        // Single-big-jump completion: the rest of the path exceeds top + y
        // with probability about gbar(gap + y).
        double gap = top - S;
        if (uniform01(rng) >= std::min(1.0, complete(gap))) break;
        double y = (gap + pareto->shift) * (std::pow(uniform_open(rng), -1.0 / (pareto->index - 1.0)) - 1.0);
        S = top + y;
        top = S;
      }
    }
    p.sup = top;
    return p;
  });
  for (const auto& s : run.samples) run.horizon_hits += s.horizon_hit;
  return run;
}

LadderMoments ladder_moment_pair(const WalkSpec& walk, double x, const std::function<double(double)>& u,
                                 const std::function<double(double)>& v, const std::function<double(double)>& h,
                                 std::size_t replicas, std::uint64_t seed, const PassageOptions& opt,
                                 const TruncationOptions& topt) {
  std::vector<double> xs{x};
  auto run = passage_functionals(walk, xs, replicas, seed, opt);
  std::vector<double> um, vs, st;
  um.reserve(replicas);
  vs.reserve(replicas);
  for (const auto& s : run.samples) {
    um.push_back(u(s.sup));
    vs.push_back(v(s.sup_before_tau[0]));
  }
  StepSampler draw(walk.step);
  st.reserve(replicas);
  for (std::size_t i = 0; i < replicas; ++i) {
    Engine rng = make_engine(seed, "ladder_step", i);
    double xi = std::max(0.0, draw(rng));
    st.push_back(xi * h(xi));
  }
  return {truncated_moment("E u(M_inf)", um, topt), truncated_moment("E v(sup before tau)", vs, topt),
          truncated_moment("E xi+ h(xi+)", st, topt)};
}

}  // namespace brwlab
