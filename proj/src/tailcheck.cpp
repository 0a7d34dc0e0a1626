#include "brwlab/tailcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "brwlab/error.hpp"
#include "brwlab/numeric.hpp"
#include "brwlab/stats.hpp"

namespace brwlab {

std::string MomentDiagnostic::verdict() const {
  if (!diverging) return "stable";
  char buf[64];
  std::snprintf(buf, sizeof buf, "diverging at slope %.3f", slope);
  return buf;
}

MomentDiagnostic truncated_moment(std::string label, std::span<const double> summand,
                                  std::span<const double> level, const TruncationOptions& opt) {
  if (summand.size() != level.size()) throw DomainError("truncated_moment: size mismatch");
  MomentDiagnostic d;
  d.label = std::move(label);
  d.threshold = opt.threshold;
  d.samples = summand.size();
  const std::size_t n = summand.size();
  if (n == 0) return d;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (level[a] != level[b]) return level[a] > level[b];
    return a < b;
  });

  NeumaierSum total;
  for (double y : summand) total.add(y);
  d.estimate = total.value() / static_cast<double>(n);

  // above[i] = sum of summands strictly ahead of position i in level order.
  std::vector<double> above(n + 1, 0.0);
  {
    NeumaierSum s;
    for (std::size_t i = 0; i < n; ++i) {
      above[i] = s.value();
      s.add(summand[order[i]]);
    }
    above[n] = s.value();
  }

  std::size_t kmax = std::min(opt.k_max, n);
  std::size_t kmin = std::max<std::size_t>(1, std::min(opt.k_min, kmax));
  std::vector<std::size_t> ks;
  for (std::size_t j = 0; j < opt.points; ++j) {
    double t = opt.points == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(opt.points - 1);
    double k = std::exp(std::log(static_cast<double>(kmin)) * (1.0 - t) +
                        std::log(static_cast<double>(kmax)) * t);
    ks.push_back(static_cast<std::size_t>(std::llround(k)));
  }
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  std::vector<double> lx, ly;
  double last_level = -1.0;
  for (auto it = ks.rbegin(); it != ks.rend(); ++it) {
    std::size_t pos = *it - 1;
    double lev = level[order[pos]];
    // Ties: include every sample at this level.
    std::size_t first = pos;
    while (first > 0 && level[order[first - 1]] == lev) --first;
    double mean = (total.value() - above[first]) / static_cast<double>(n);
    if (lev == last_level) continue;
    last_level = lev;
    d.trace.push_back({lev, mean});
    if (lev > 0.0 && mean > 0.0) {
      lx.push_back(std::log(lev));
      ly.push_back(std::log(mean));
    }
  }
  if (lx.size() >= 3) d.slope = ols(lx, ly).slope;
  d.diverging = d.slope >= opt.threshold;
  return d;
}

}  // namespace brwlab
