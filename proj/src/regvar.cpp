#include "brwlab/regvar.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

#include "brwlab/error.hpp"
#include "brwlab/numeric.hpp"

namespace brwlab {

namespace {

const double kE = std::exp(1.0);
const double kEE = std::exp(kE);

double parse_number(std::string_view s, std::string_view context) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("bad number '" + std::string(s) + "' in regvar family '" + std::string(context) + "'");
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view to_string(Role r) {
  switch (r) {
    case Role::a: return "a";
    case Role::b: return "b";
    case Role::c: return "c";
  }
  return "?";
}

std::string_view to_string(ConstructedKind k) {
  switch (k) {
    case ConstructedKind::lambda_beta: return "lambda_beta";
    case ConstructedKind::f_tilde: return "f_tilde";
    case ConstructedKind::phi: return "phi";
    case ConstructedKind::g_tilde: return "g_tilde";
    case ConstructedKind::psi: return "psi";
  }
  return "?";
}

double SlowlyVarying::operator()(double x) const {
  double v = constant;
  if (log_power != 0.0) v *= std::pow(std::log(kE + x), log_power);
  if (loglog_power != 0.0) v *= std::pow(std::log(std::log(kEE + x)), loglog_power);
  return v;
}

RegVarFn::RegVarFn(Role role, double exponent, SlowlyVarying sv)
    : role_(role), exponent_(exponent), sv_(sv) {
  if (!std::isfinite(exponent)) throw DomainError("regvar exponent must be finite");
  if (!(sv.constant > 0.0) || !std::isfinite(sv.constant))
    throw DomainError("slowly varying constant must be positive and finite");
  if (!std::isfinite(sv.log_power) || !std::isfinite(sv.loglog_power))
    throw DomainError("slowly varying powers must be finite");
  switch (role) {
    case Role::a:
      if (!(exponent > -1.0)) throw DomainError("a(x) needs exponent > -1, got " + fmt(exponent));
      if (exponent == 0.0 && !sv.non_decreasing())
        throw DomainError("a(x) with exponent 0 must be non-decreasing (non-negative log powers)");
      break;
    case Role::b:
      if (!(exponent > 0.0)) throw DomainError("b(x) needs exponent > 0, got " + fmt(exponent));
      break;
    case Role::c:
      if (!(exponent > 1.0)) throw DomainError("c(x) needs exponent > 1, got " + fmt(exponent));
      break;
  }
}

double RegVarFn::operator()(double x) const {
  if (!(x > 0.0) || !std::isfinite(x))
    throw DomainError("regvar evaluated at x = " + fmt(x) + " outside (0, inf)");
  return std::pow(x, exponent_) * sv_(x);
}

std::string RegVarFn::describe() const {
  std::string s(to_string(role_));
  s += ":x^" + fmt(exponent_);
  if (sv_.log_power != 0.0) s += "*log^" + fmt(sv_.log_power);
  if (sv_.loglog_power != 0.0) s += "*loglog^" + fmt(sv_.loglog_power);
  if (sv_.constant != 1.0) s += "*" + fmt(sv_.constant);
  return s;
}

double eval(const RegVarFn& f, double x) { return f(x); }

RegVarFn derive_b(const RegVarFn& a) {
  if (a.role() != Role::a) throw DomainError("derive_b expects a function in role a");
  return RegVarFn(Role::b, a.exponent() + 1.0, a.slowly_varying());
}

RegVarFn derive_c(const RegVarFn& b) {
  if (b.role() != Role::b) throw DomainError("derive_c expects a function in role b");
  return RegVarFn(Role::c, b.exponent() + 1.0, b.slowly_varying());
}

RegVarFn parse_regvar(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw ConfigError("regvar family '" + std::string(text) + "' lacks a role prefix");
  std::string_view role_s = text.substr(0, colon);
  Role role;
  if (role_s == "a") role = Role::a;
  else if (role_s == "b") role = Role::b;
  else if (role_s == "c") role = Role::c;
  else throw ConfigError("unknown regvar role '" + std::string(role_s) + "'");

  double exponent = 0.0;
  SlowlyVarying sv;
  std::string_view rest = text.substr(colon + 1);
  while (!rest.empty()) {
    auto star = rest.find('*');
    std::string_view term = rest.substr(0, star);
    rest = star == std::string_view::npos ? std::string_view{} : rest.substr(star + 1);
    auto caret = term.find('^');
    std::string_view head = term.substr(0, caret);
    double power = caret == std::string_view::npos ? 1.0 : parse_number(term.substr(caret + 1), text);
    if (head == "x") exponent += power;
    else if (head == "log") sv.log_power += power;
    else if (head == "loglog") sv.loglog_power += power;
    else if (caret == std::string_view::npos) sv.constant *= parse_number(head, text);
    else throw ConfigError("unknown term '" + std::string(term) + "' in regvar family '" + std::string(text) + "'");
  }
  return RegVarFn(role, exponent, sv);
}

double lambda_beta(const RegVarFn& b, double y) {
  if (!(y > 1.0)) throw DomainError("lambda_beta needs y > 1, got " + fmt(y));
  double beta = b.exponent();
  if (!(beta > 0.0)) throw DomainError("lambda_beta needs beta > 0");
  double ly = std::log(y);
  return std::pow(ly, beta - 1.0) * b.slowly_varying()(ly) / (beta * y);
}

double karamata_sum_ratio(const RegVarFn& b, std::uint64_t m) {
  if (m < 1) throw DomainError("karamata_sum_ratio needs m >= 1");
  NeumaierSum s;
  for (std::uint64_t n = 1; n <= m; ++n) s.add(b(static_cast<double>(n)));
  double md = static_cast<double>(m);
  return s.value() / (md * b(md) / (b.exponent() + 1.0));
}

namespace {

bool potter_holds(const RegVarFn& f, double x, double y, double q, double theta, double* ratio,
                  double* bound) {
  double r = f(y) / f(x);
  double t = y / x;
  double rho = f.exponent();
  double bd = (1.0 + q) * std::max(std::pow(t, rho + theta), std::pow(t, rho - theta));
  if (ratio) *ratio = r;
  if (bound) *bound = bd;
  return r <= bd * (1.0 + 1e-14);
}

}  // namespace

double potter_threshold(const RegVarFn& f, double q, double theta) {
  if (!(q > 0.0) || !(theta > 0.0)) throw DomainError("potter needs q > 0 and theta > 0");
  if (f.slowly_varying().is_constant()) return 0.0;
  for (int k = -6; k <= 12; ++k) {
    double x0 = std::pow(10.0, k);
    bool ok = true;
    const int pts = 49;
    for (int i = 0; i < pts && ok; ++i) {
      double x = x0 * std::pow(10.0, 12.0 * i / (pts - 1));
      for (int j = 0; j < pts && ok; ++j) {
        double y = x0 * std::pow(10.0, 12.0 * j / (pts - 1));
        ok = potter_holds(f, x, y, q, theta, nullptr, nullptr);
      }
    }
    if (ok) return x0;
  }
  throw DomainError("no Potter threshold found up to 1e12");
}

PotterCheck potter_bound(const RegVarFn& f, double x, double y, double q, double theta) {
  PotterCheck c;
  c.threshold = potter_threshold(f, q, theta);
  if (x < c.threshold || y < c.threshold || !(x > 0.0) || !(y > 0.0))
    throw DomainError("potter_bound arguments below threshold " + fmt(c.threshold));
  c.holds = potter_holds(f, x, y, q, theta, &c.ratio, &c.bound);
  c.margin = c.bound - c.ratio;
  return c;
}

// ---------------------------------------------------------------------------
// ConstructedFn

double ConstructedFn::hv(double v) const {
  const auto& L = base_.slowly_varying();
  if (v <= 0.0) {
    if (rate_ < 1.0) return kInf;
    if (rate_ > 1.0) return 0.0;
    return L(0.0);
  }
  return rate_ * std::pow(v, rate_ - 1.0) * L(v) * std::exp(-v);
}

double ConstructedFn::gv(double v) const {
  return rate_ * std::pow(v, rate_ - 1.0) * base_.slowly_varying()(v);
}

double ConstructedFn::mass(double lo, double hi) const {
  if (hi <= lo) return 0.0;
  const auto& L = base_.slowly_varying();
  const double r = rate_;
  auto follow = [&](double a, double b) {
    if (b <= a) return 0.0;
    // w = v^r removes the v^(r-1) factor and any singularity at v = 0.
    auto f = [&](double w) { return L(std::pow(w, 1.0 / r)); };
    QuadratureBudget budget;
    return adaptive_simpson(f, std::pow(a, r), std::pow(b, r), tol_, budget);
  };
  double total = 0.0;
  double cur = lo;
  for (const auto& p : plateaus_) {
    if (p.hi <= cur) continue;
    if (p.lo >= hi) break;
    double a = std::max(p.lo, cur);
    double b = std::min(p.hi, hi);
    total += follow(cur, a);
    total += p.value * (std::exp(b) - std::exp(a));
    cur = b;
    if (cur >= hi) return total;
  }
  return total + follow(cur, hi);
}

double ConstructedFn::cumulative(double v) const {
  if (v <= 0.0) return 0.0;
  std::size_t i = std::min(static_cast<std::size_t>(v / delta_), cells_);
  const auto& tab = kind_ == ConstructedKind::g_tilde ? f_table_ : table_;
  return tab[i] + mass(static_cast<double>(i) * delta_, v);
}

double ConstructedFn::inner_f(double w) const {
  double v = w > 0 ? w + std::log1p(std::exp(-w)) : std::log1p(std::exp(w));
  return cumulative(v);
}

double ConstructedFn::g_cumulative(double v) const {
  if (v <= 0.0) return 0.0;
  std::size_t i = std::min(static_cast<std::size_t>(v / delta_), cells_);
  QuadratureBudget budget;
  return table_[i] +
         adaptive_simpson([this](double w) { return inner_f(w); }, static_cast<double>(i) * delta_, v,
                          tol_, budget);
}

double ConstructedFn::psi_v(double v) const {
  if (v <= 0.0) return 0.0;
  RegVarFn c = derive_c(base_);
  std::size_t i = std::min(static_cast<std::size_t>(v / delta_), cells_);
  return std::max(table_[i], c(v));
}

void ConstructedFn::build() {
  const auto& sv = base_.slowly_varying();
  const double beta = base_.exponent();
  rate_ = kind_ == ConstructedKind::phi ? beta + 1.0 : beta;
  if (kind_ == ConstructedKind::lambda_beta) return;

  double v_top = std::max(static_cast<double>(cells_) * delta_,
                          std::fabs(rate_ - 1.0) + std::fabs(sv.log_power) + std::fabs(sv.loglog_power) + 1.0);
  cells_ = static_cast<std::size_t>(std::ceil(v_top / delta_));
  auto vs = [&](std::size_t i) { return static_cast<double>(i) * delta_; };

  if (kind_ == ConstructedKind::psi) {
    RegVarFn c = derive_c(base_);
    table_.assign(cells_ + 1, 0.0);
    for (std::size_t i = 1; i <= cells_; ++i) table_[i] = std::max(table_[i - 1], c(vs(i)));
    // Subadditivity constant: grid search over log-coordinates, then a
    // local refinement of the best pair.
    const int pts = 240;
    const double u_lo = 1e-6, u_hi = 0.5 * vs(cells_);
    std::vector<double> us(pts);
    for (int i = 0; i < pts; ++i) us[i] = u_lo * std::pow(u_hi / u_lo, i / double(pts - 1));
    auto ratio = [&](double u, double w) { return psi_v(u + w) / (psi_v(u) + psi_v(w)); };
    double best = 1.0, bu = us[0], bw = us[0];
    for (double u : us)
      for (double w : us) {
        double r = ratio(u, w);
        if (r > best) best = r, bu = u, bw = w;
      }
    double step = 0.05;
    for (int it = 0; it < 200 && step > 1e-9; ++it) {
      bool moved = false;
      for (auto [du, dw] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}}) {
        double u = bu * std::exp(step * du), w = bw * std::exp(step * dw);
        if (u + w > vs(cells_)) continue;
        double r = ratio(u, w);
        if (r > best) best = r, bu = u, bw = w, moved = true;
      }
      if (!moved) step *= 0.5;
    }
    a_ = best * (1.0 + 1e-9);
    return;
  }

  // Right-to-left scan for sup_{t >= v} h(t): plateaus where the running sup
  // exceeds h, each refined to the exact peak and crossing points.
  double sup = hv(vs(cells_));
  bool follow = true;
  double plateau_hi = 0.0, level = 0.0;
  for (std::size_t k = cells_; k-- > 0;) {
    double h = hv(vs(k));
    if (follow) {
      if (h >= sup) {
        sup = h;
        continue;
      }
      auto peak = golden_max([this](double v) { return hv(v); }, vs(k), vs(std::min(k + 2, cells_)));
      plateau_hi = peak.x;
      level = std::max(peak.value, sup);
      follow = false;
    } else if (h >= level) {
      double a = find_root([&](double v) { return hv(v) - level; }, vs(k), vs(k + 1));
      plateaus_.push_back({a, plateau_hi, level});
      follow = true;
      sup = h;
    }
  }
  if (!follow) plateaus_.push_back({0.0, plateau_hi, level});
  std::sort(plateaus_.begin(), plateaus_.end(), [](const Plateau& x, const Plateau& y) { return x.lo < y.lo; });

  std::vector<double> cum(cells_ + 1, 0.0);
  for (std::size_t i = 0; i < cells_; ++i) cum[i + 1] = cum[i] + mass(vs(i), vs(i + 1));

  if (kind_ == ConstructedKind::g_tilde) {
    f_table_ = std::move(cum);
    table_.assign(cells_ + 1, 0.0);
    for (std::size_t i = 0; i < cells_; ++i) {
      QuadratureBudget budget;
      table_[i + 1] = table_[i] + adaptive_simpson([this](double w) { return inner_f(w); }, vs(i),
                                                   vs(i + 1), tol_, budget);
    }
  } else {
    table_ = std::move(cum);
  }
}

double ConstructedFn::at_log(double log_x) const {
  switch (kind_) {
    case ConstructedKind::lambda_beta: {
      if (!(log_x > 0.0)) throw DomainError("lambda_beta needs y > 1");
      double beta = base_.exponent();
      return std::pow(log_x, beta - 1.0) * base_.slowly_varying()(log_x) / beta * std::exp(-log_x);
    }
    case ConstructedKind::psi:
      return psi_v(log_x);
    default: {
      double v = log_x > 0 ? log_x + std::log1p(std::exp(-log_x)) : std::log1p(std::exp(log_x));
      return kind_ == ConstructedKind::g_tilde ? g_cumulative(v) : cumulative(v);
    }
  }
}

double ConstructedFn::operator()(double x) const {
  switch (kind_) {
    case ConstructedKind::lambda_beta:
      return lambda_beta(base_, x);
    case ConstructedKind::psi:
      return x <= 1.0 ? 0.0 : psi_v(std::log(x));
    default: {
      if (!(x >= 0.0)) throw DomainError(std::string(to_string(kind_)) + " needs x >= 0, got " + fmt(x));
      double v = std::log1p(x);
      return kind_ == ConstructedKind::g_tilde ? g_cumulative(v) : cumulative(v);
    }
  }
}

std::vector<std::pair<double, double>> ConstructedFn::grid() const {
  std::vector<std::pair<double, double>> out;
  if (kind_ == ConstructedKind::lambda_beta) return out;
  out.reserve(table_.size());
  for (std::size_t i = 0; i < table_.size(); ++i) {
    double v = static_cast<double>(i) * delta_;
    double x = kind_ == ConstructedKind::psi ? std::exp(v) : std::expm1(v);
    out.emplace_back(x, table_[i]);
  }
  return out;
}

ConstructedFn construct(ConstructedKind kind, const RegVarFn& base, double tol, double v_max) {
  if (base.role() != Role::b) throw DomainError("constructions take a function in role b");
  if (!(base.exponent() > 0.0)) throw DomainError("constructions need beta > 0");
  if (!(tol > 0.0)) throw DomainError("construct needs tol > 0");
  if (!(v_max > 0.0)) throw DomainError("construct needs v_max > 0");
  ConstructedFn f(kind, base, tol);
  f.delta_ = std::log(1.01);
  f.cells_ = static_cast<std::size_t>(std::ceil(v_max / f.delta_));
  f.build();
  return f;
}

}  // namespace brwlab
