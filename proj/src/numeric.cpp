#include "brwlab/numeric.hpp"

#include <boost/math/tools/roots.hpp>

namespace brwlab {

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double norm_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double log_norm_cdf(double z) {
  if (z > -30.0) return std::log(norm_cdf(z));
  // Mills-ratio asymptotic expansion.
  double z2 = z * z;
  double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * M_PI) + std::log(series);
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double xtol) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) throw DomainError("find_root: interval does not bracket a root");
  std::uintmax_t iters = 200;
  auto tol = [xtol](double a, double b) { return std::fabs(b - a) <= xtol * std::fmax(1.0, std::fabs(a)); };
  auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
  return 0.5 * (r.first + r.second);
}

Maximum golden_max(const std::function<double(double)>& f, double lo, double hi, double xtol) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > xtol * std::fmax(1.0, std::fabs(a))) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  double x = 0.5 * (a + b);
  Maximum best{x, f(x)};
  for (double e : {lo, hi}) {
    double v = f(e);
    if (v > best.value) best = {e, v};
  }
  return best;
}

SeriesTail geometric_tail_sum(const std::function<double(std::uint64_t)>& term, std::uint64_t first,
                              double rel_eps, std::uint64_t max_terms) {
  NeumaierSum sum;
  double prev = term(first);
  if (!(prev >= 0.0)) return {kInf, 0, false};
  sum.add(prev);
  double prev_ratio = kInf;
  int settled = 0;
  for (std::uint64_t k = 1; k < max_terms; ++k) {
    double t = term(first + k);
    if (!std::isfinite(t)) return {kInf, k, false};
    sum.add(t);
    if (t == 0.0) return {sum.value(), k + 1, true};
    double ratio = t / prev;
    settled = (ratio < 1.0 && ratio <= prev_ratio * (1.0 + 1e-12)) ? settled + 1 : 0;
    if (settled >= 8 && t * ratio / (1.0 - ratio) <= rel_eps * sum.value())
      return {sum.value() + t * ratio / (1.0 - ratio), k + 1, true};
    prev = t;
    prev_ratio = ratio;
  }
  return {kInf, max_terms, false};
}

}  // namespace brwlab
