#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace brwlab {

struct TruncationOptions {
  // Truncation levels sit at the k-th largest level for k log-spaced in
  // [k_min, k_max], i.e. the top two decades of order statistics.
  std::size_t k_min = 1;
  std::size_t k_max = 100;
  std::size_t points = 21;
  double threshold = 0.1;
};

struct TruncationPoint {
  double level;
  double running_mean;
};

struct MomentDiagnostic {
  std::string label;
  double estimate = 0.0;  // plain sample mean of the summand
  double slope = 0.0;     // d log(truncated mean) / d log(level)
  double threshold = 0.0;
  bool diverging = false;
  std::size_t samples = 0;
  std::vector<TruncationPoint> trace;

  std::string verdict() const;
};

// Truncated-moment slope diagnostic for E[summand], truncating on `level`
// (both non-negative, paired by index). A sample with fewer than three
// distinct positive levels in range is reported stable with slope 0.
MomentDiagnostic truncated_moment(std::string label, std::span<const double> summand,
                                  std::span<const double> level,
                                  const TruncationOptions& opt = {});

inline MomentDiagnostic truncated_moment(std::string label, std::span<const double> values,
                                         const TruncationOptions& opt = {}) {
  return truncated_moment(std::move(label), values, values, opt);
}

}  // namespace brwlab
