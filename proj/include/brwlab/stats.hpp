#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace brwlab {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> xs);

double variance(std::span<const double> xs);

// Standard error of the sample variance, from the fourth central moment.
double variance_se(std::span<const double> xs);

// Empirical p-quantile (linear interpolation between order statistics).
double quantile(std::vector<double> xs, double p);

// sup |F_n - F| where F may have atoms; cdf_left(x) = P{X < x}.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf,
                   const std::function<double(double)>& cdf_left);

inline double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  return ks_distance(std::move(sample), cdf, cdf);
}

double ks_two_sample(std::vector<double> a, std::vector<double> b);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit ols(std::span<const double> x, std::span<const double> y);

// OLS slope of log P{X > t} against t over `points` equally spaced t in
// [lo, hi]; minus the slope estimates an exponential tail rate.
double exp_tail_rate(std::span<const double> sample, double lo, double hi, std::size_t points = 17);

}  // namespace brwlab
