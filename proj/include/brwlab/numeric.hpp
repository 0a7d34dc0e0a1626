#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>

#include "brwlab/error.hpp"

namespace brwlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

double norm_cdf(double z);
double norm_sf(double z);
// log Phi(z), accurate far into the lower tail.
double log_norm_cdf(double z);

// Compensated summation.
class NeumaierSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct QuadratureBudget {
  std::size_t max_cells = 1'000'000;
  std::size_t used = 0;
};

namespace detail {

template <class F>
double simpson_rec(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                   double tol, int depth, QuadratureBudget& budget) {
  if (++budget.used > budget.max_cells) throw QuadratureError("quadrature cell cap reached", a, b);
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m);
  double rm = 0.5 * (m + b);
  double flm = f(lm);
  double frm = f(rm);
  if (!std::isfinite(flm) || !std::isfinite(frm))
    throw QuadratureError("non-finite integrand", a, b);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (std::fabs(delta) <= 15.0 * tol || (b - a) <= 1e-13 * std::fmax(1.0, std::fabs(a)))
    return left + right + delta / 15.0;
  if (depth <= 0) throw QuadratureError("quadrature did not converge", a, b);
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, budget) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, budget);
}

}  // namespace detail

// Adaptive composite Simpson on [a, b] with absolute tolerance tol.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol, QuadratureBudget& budget) {
  if (a == b) return 0.0;
  double fa = f(a);
  double fb = f(b);
  double fm = f(0.5 * (a + b));
  if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm))
    throw QuadratureError("non-finite integrand", a, b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50, budget);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
  QuadratureBudget budget;
  return adaptive_simpson(f, a, b, tol, budget);
}

// Root of f on [lo, hi]; f(lo) and f(hi) must differ in sign.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double xtol = 1e-14);

struct Maximum {
  double x;
  double value;
};

// Maximum of a unimodal f on [lo, hi] by golden-section search.
Maximum golden_max(const std::function<double(double)>& f, double lo, double hi,
                   double xtol = 1e-12);

struct SeriesTail {
  double value;
  std::size_t explicit_terms;
  bool converged;
};

// Sum of term(n) for n >= first, for eventually geometrically decaying
// positive terms: explicit summation until the term ratio has settled below
// one and the term is negligible, then a geometric remainder.
SeriesTail geometric_tail_sum(const std::function<double(std::uint64_t)>& term, std::uint64_t first,
                              double rel_eps = 1e-15, std::uint64_t max_terms = 10'000'000);

}  // namespace brwlab
