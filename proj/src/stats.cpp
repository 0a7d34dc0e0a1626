#include "brwlab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "brwlab/error.hpp"

namespace brwlab {

MeanSe mean_se(std::span<const double> xs) {
  MeanSe r;
  r.n = xs.size();
  if (r.n == 0) return r;
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double x : xs) {
    ++k;
    double d = x - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (x - mean);
  }
  r.mean = mean;
  if (r.n > 1) {
    r.sd = std::sqrt(m2 / static_cast<double>(r.n - 1));
    r.se = r.sd / std::sqrt(static_cast<double>(r.n));
  }
  return r;
}

double variance(std::span<const double> xs) {
  auto m = mean_se(xs);
  return m.sd * m.sd;
}

double variance_se(std::span<const double> xs) {
  std::size_t n = xs.size();
  if (n < 4) return 0.0;
  double mean = mean_se(xs).mean;
  double m2 = 0.0, m4 = 0.0;
  for (double x : xs) {
    double d = (x - mean) * (x - mean);
    m2 += d;
    m4 += d * d;
  }
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  return std::sqrt(std::max(0.0, (m4 - m2 * m2) / static_cast<double>(n)));
}

double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) throw DomainError("quantile of an empty sample");
  std::sort(xs.begin(), xs.end());
  double pos = p * static_cast<double>(xs.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, xs.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return xs[lo] + frac * (xs[hi] - xs[lo]);
}

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf,
                   const std::function<double(double)>& cdf_left) {
  if (sample.empty()) throw DomainError("ks_distance of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < sample.size()) {
    std::size_t j = i;
    while (j < sample.size() && sample[j] == sample[i]) ++j;
    double below = static_cast<double>(i) / n;
    double upto = static_cast<double>(j) / n;
    d = std::max(d, std::fabs(below - cdf_left(sample[i])));
    d = std::max(d, std::fabs(upto - cdf(sample[i])));
    i = j;
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

LineFit ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("ols needs two or more paired points");
  double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw DomainError("ols with constant abscissa");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

double exp_tail_rate(std::span<const double> sample, double lo, double hi, std::size_t points) {
  if (points < 2 || !(hi > lo)) throw DomainError("exp_tail_rate needs points >= 2 and hi > lo");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<double> t, ls;
  for (std::size_t i = 0; i < points; ++i) {
    double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    auto above = static_cast<double>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), x));
    if (above == 0.0) throw DomainError("exp_tail_rate: no sample above the fit range");
    t.push_back(x);
    ls.push_back(std::log(above / n));
  }
  return -ols(t, ls).slope;
}

}  // namespace brwlab
