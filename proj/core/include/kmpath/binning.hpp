#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "kmpath/simulate.hpp"

namespace kmpath {

struct BinningConfig {
  int n_bins = 50;
  int min_count = 100;
  // Absent range = auto: trimmed to the [0.5%, 99.5%] data quantiles so
  // bins dominated by rare excursions do not enter the regression.
  std::optional<std::pair<double, double>> range;
};

struct BinnedMoments {
  Eigen::VectorXd centers;              // kept-bin midpoints, strictly increasing
  Eigen::VectorXd y1;                   // per-bin mean of dx/dt
  Eigen::VectorXd y2;                   // per-bin mean of dx^2/dt (raw second moment)
  std::vector<long> counts;             // per kept bin, each >= min_count
  long dropped_pairs = 0;               // outside range or in discarded bins
  double delta_t = 0.0;
};

inline constexpr double kAutoRangeQuantileLo = 0.005;
inline constexpr double kAutoRangeQuantileHi = 0.995;

// Equal-width bins over [x_lo, x_hi); pair i lands in bin
// floor(G*(x_i-x_lo)/(x_hi-x_lo)), the right edge in the last bin, and
// pairs outside the range are dropped. Bins with fewer than min_count
// pairs are discarded. Throws numeric_error ("insufficient data") when no
// usable bins remain or the config cannot produce two bins.
BinnedMoments bin_moments(const IncrementPairs& pairs, const BinningConfig& cfg);

}  // namespace kmpath
