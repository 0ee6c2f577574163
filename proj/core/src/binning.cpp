#include "kmpath/binning.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kmpath/errors.hpp"

namespace kmpath {

namespace {

// Order-statistic quantile with linear interpolation between ranks.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = q * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

BinnedMoments bin_moments(const IncrementPairs& pairs, const BinningConfig& cfg) {
  const Eigen::Index n = pairs.x.size();
  if (n == 0 || pairs.dx.size() != n) throw config_error("bin_moments: empty or ragged pairs");
  if (!(pairs.delta_t > 0.0)) throw config_error("bin_moments: delta_t must be > 0");
  const int G = cfg.n_bins;
  if (G < 2) throw numeric_error("insufficient data: need at least 2 bins, got n_bins=" +
                                 std::to_string(G));

  double x_lo, x_hi;
  if (cfg.range) {
    x_lo = cfg.range->first;
    x_hi = cfg.range->second;
  } else {
    std::vector<double> sorted(pairs.x.data(), pairs.x.data() + n);
    std::sort(sorted.begin(), sorted.end());
    x_lo = quantile_sorted(sorted, kAutoRangeQuantileLo);
    x_hi = quantile_sorted(sorted, kAutoRangeQuantileHi);
  }
  if (!(x_lo < x_hi)) throw numeric_error("insufficient data: degenerate binning range");

  const double width = x_hi - x_lo;
  std::vector<long> counts(G, 0);
  std::vector<double> sum_dx(G, 0.0), sum_dx2(G, 0.0);
  long dropped = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = pairs.x[i];
    if (x < x_lo || x > x_hi) {
      ++dropped;
      continue;
    }
    int j = static_cast<int>(std::floor(G * (x - x_lo) / width));
    if (j >= G) j = G - 1;  // right edge belongs to the last bin
    if (j < 0) j = 0;
    ++counts[j];
    const double dx = pairs.dx[i];
    sum_dx[j] += dx;
    sum_dx2[j] += dx * dx;
  }

  std::vector<int> kept;
  for (int j = 0; j < G; ++j) {
    if (counts[j] >= cfg.min_count)
      kept.push_back(j);
    else
      dropped += counts[j];
  }
  if (kept.empty())
    throw numeric_error("insufficient data: every bin has fewer than min_count=" +
                        std::to_string(cfg.min_count) + " pairs");

  BinnedMoments out;
  out.delta_t = pairs.delta_t;
  out.dropped_pairs = dropped;
  const auto n_kept = static_cast<Eigen::Index>(kept.size());
  out.centers.resize(n_kept);
  out.y1.resize(n_kept);
  out.y2.resize(n_kept);
  out.counts.reserve(kept.size());
  for (Eigen::Index r = 0; r < n_kept; ++r) {
    const int j = kept[static_cast<std::size_t>(r)];
    const double c = static_cast<double>(counts[j]);
    out.centers[r] = x_lo + (j + 0.5) * width / G;
    out.y1[r] = sum_dx[j] / c / pairs.delta_t;
    out.y2[r] = sum_dx2[j] / c / pairs.delta_t;
    out.counts.push_back(counts[j]);
  }
  return out;
}

}  // namespace kmpath
