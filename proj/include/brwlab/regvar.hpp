#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace brwlab {

enum class Role { a, b, c };

std::string_view to_string(Role r);

// L(x) = k * log(e + x)^p * (log log(e^e + x))^q, finite and positive for x > 0.
struct SlowlyVarying {
  double constant = 1.0;
  double log_power = 0.0;
  double loglog_power = 0.0;

  double operator()(double x) const;
  bool is_constant() const { return log_power == 0.0 && loglog_power == 0.0; }
  bool non_decreasing() const { return log_power >= 0.0 && loglog_power >= 0.0; }
};

// x^rho * L(x) on x > 0. Role a needs rho > -1 (and a non-decreasing L when
// rho = 0), role b needs rho > 0, role c needs rho > 1.
class RegVarFn {
 public:
  RegVarFn(Role role, double exponent, SlowlyVarying sv = {});

  Role role() const { return role_; }
  double exponent() const { return exponent_; }
  const SlowlyVarying& slowly_varying() const { return sv_; }
  double x_min() const { return 0.0; }  // exclusive

  double operator()(double x) const;
  // f(u) for u > 0 and 0 for u <= 0; the form used on log+ arguments.
  double at_positive(double u) const { return u > 0.0 ? (*this)(u) : 0.0; }

  std::string describe() const;

 private:
  Role role_;
  double exponent_;
  SlowlyVarying sv_;
};

double eval(const RegVarFn& f, double x);
RegVarFn derive_b(const RegVarFn& a);
RegVarFn derive_c(const RegVarFn& b);

// Parses "role:term*term*..." with terms x, x^r, log, log^p, loglog,
// loglog^q or a positive constant, e.g. "b:x^2" or "a:x^0.5*log^1".
RegVarFn parse_regvar(std::string_view text);

double lambda_beta(const RegVarFn& b, double y);

double karamata_sum_ratio(const RegVarFn& b, std::uint64_t m);

struct PotterCheck {
  double ratio = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // bound - ratio
  double threshold = 0.0;
  bool holds = false;
};

// Smallest X0 among 0 and 10^k (k = -6..12) for which the Potter inequality
// holds on a log grid of pairs in [X0, 1e12 * max(X0, 1)].
double potter_threshold(const RegVarFn& f, double q, double theta);
PotterCheck potter_bound(const RegVarFn& f, double x, double y, double q, double theta);

enum class ConstructedKind { lambda_beta, f_tilde, phi, g_tilde, psi };

std::string_view to_string(ConstructedKind k);

class ConstructedFn {
 public:
  ConstructedKind kind() const { return kind_; }
  const RegVarFn& base() const { return base_; }
  double tolerance() const { return tol_; }

  double operator()(double x) const;
  // Value at x = exp(log_x) without forming x; valid for every kind.
  double at_log(double log_x) const;

  // Tabulated (x, value) pairs.
  std::vector<std::pair<double, double>> grid() const;

  // Constant a in psi(xy) <= a (psi(x) + psi(y)), found by grid search
  // (psi only).
  double subadditivity_constant() const { return a_; }

  friend ConstructedFn construct(ConstructedKind kind, const RegVarFn& base, double tol,
                                 double v_max);

 private:
  struct Plateau {
    double lo, hi, value;
  };

  ConstructedFn(ConstructedKind kind, RegVarFn base, double tol)
      : kind_(kind), base_(std::move(base)), tol_(tol) {}

  double hv(double v) const;  // running-sup target, in log coordinates
  double gv(double v) const;  // integrand of the f_tilde/phi mass in v
  double mass(double lo, double hi) const;
  double cumulative(double v) const;  // integral of sup-Lambda up to y = e^v
  double inner_f(double w) const;     // f_tilde(e^w) for the g_tilde integrand
  double g_cumulative(double v) const;
  double psi_v(double v) const;
  void build();

  ConstructedKind kind_;
  RegVarFn base_;
  double tol_;
  double rate_ = 1.0;  // regular-variation index of the integrated density
  double delta_ = 0.0;
  std::size_t cells_ = 0;
  std::vector<Plateau> plateaus_;
  std::vector<double> table_;  // cumulative values at v_i = i * delta_
  std::vector<double> f_table_;
  double a_ = 0.0;
};

// v_max bounds the tabulated range in log coordinates; beyond it values are
// integrated on demand.
ConstructedFn construct(ConstructedKind kind, const RegVarFn& base, double tol = 1e-10,
                        double v_max = 80.0);

}  // namespace brwlab
