#include <doctest.h>

#include <cmath>
#include <vector>

#include "kmpath/binning.hpp"
#include "kmpath/errors.hpp"
#include "kmpath/rng.hpp"
#include "kmpath/sde_model.hpp"
#include "kmpath/simulate.hpp"

using namespace kmpath;

namespace {

IncrementPairs make_pairs(std::vector<double> x, std::vector<double> dx, double dt) {
  IncrementPairs p;
  p.x = Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  p.dx = Eigen::Map<Eigen::VectorXd>(dx.data(), static_cast<Eigen::Index>(dx.size()));
  p.delta_t = dt;
  return p;
}

}  // namespace

TEST_SUITE("binning") {

TEST_CASE("two-bin worked example is exact") {
  IncrementPairs p = make_pairs({0.1, 0.1, 0.9}, {1.0, 3.0, 5.0}, 1.0);
  BinningConfig cfg;
  cfg.n_bins = 2;
  cfg.min_count = 1;
  cfg.range = {{0.0, 1.0}};
  BinnedMoments b = bin_moments(p, cfg);
  REQUIRE(b.centers.size() == 2);
  CHECK(b.centers[0] == 0.25);
  CHECK(b.centers[1] == 0.75);
  CHECK(b.counts[0] == 2);
  CHECK(b.counts[1] == 1);
  CHECK(b.y1[0] == 2.0);  // mean(1, 3) / dt
  CHECK(b.y1[1] == 5.0);
  CHECK(b.y2[0] == 5.0);  // mean(1, 9) / dt
  CHECK(b.y2[1] == 25.0);
  CHECK(b.dropped_pairs == 0);
  CHECK(b.delta_t == 1.0);
}

TEST_CASE("delta_t rescales both moments") {
  IncrementPairs p = make_pairs({0.1, 0.9}, {1.0, 2.0}, 0.25);
  BinningConfig cfg;
  cfg.n_bins = 2;
  cfg.min_count = 1;
  cfg.range = {{0.0, 1.0}};
  BinnedMoments b = bin_moments(p, cfg);
  CHECK(b.y1[0] == 4.0);
  CHECK(b.y2[0] == 4.0);
  CHECK(b.y1[1] == 8.0);
  CHECK(b.y2[1] == 16.0);
}

TEST_CASE("the right range edge belongs to the last bin") {
  IncrementPairs p = make_pairs({0.0, 1.0, 0.2}, {1.0, 2.0, 3.0}, 1.0);
  BinningConfig cfg;
  cfg.n_bins = 2;
  cfg.min_count = 1;
  cfg.range = {{0.0, 1.0}};
  BinnedMoments b = bin_moments(p, cfg);
  CHECK(b.counts[0] == 2);  // x = 0.0 and 0.2
  CHECK(b.counts[1] == 1);  // x = 1.0
  CHECK(b.dropped_pairs == 0);
}

TEST_CASE("bins below min_count are discarded and counted as dropped") {
  IncrementPairs p = make_pairs({0.1, 0.15, 0.2, 0.9}, {1.0, 1.0, 1.0, 7.0}, 1.0);
  BinningConfig cfg;
  cfg.n_bins = 2;
  cfg.min_count = 2;
  cfg.range = {{0.0, 1.0}};
  BinnedMoments b = bin_moments(p, cfg);
  REQUIRE(b.centers.size() == 1);
  CHECK(b.centers[0] == 0.25);
  CHECK(b.counts[0] == 3);
  CHECK(b.dropped_pairs == 1);
}

TEST_CASE("count conservation: kept plus dropped equals total") {
  // Gaussian occupancy: center bins are rich, tail bins sparse, so raising
  // min_count drops some bins but never all of them.
  const int n = 5000;
  std::vector<double> x(n), dx(n);
  for (int i = 0; i < n; ++i) {
    x[i] = 1.2 * normal_draw(11, 0, static_cast<std::uint64_t>(i));
    dx[i] = normal_draw(11, 1, static_cast<std::uint64_t>(i));
  }
  IncrementPairs p = make_pairs(x, dx, 0.01);
  for (int min_count : {1, 50, 400}) {
    BinningConfig cfg;
    cfg.n_bins = 13;
    cfg.min_count = min_count;
    cfg.range = {{-2.0, 2.0}};
    BinnedMoments b = bin_moments(p, cfg);
    long kept = 0;
    for (long c : b.counts) {
      kept += c;
      CHECK(c >= min_count);
    }
    CHECK(kept + b.dropped_pairs == n);
    for (Eigen::Index r = 1; r < b.centers.size(); ++r)
      CHECK(b.centers[r] > b.centers[r - 1]);
  }
}

TEST_CASE("power-of-two coordinate scaling maps the moments bitwise") {
  // Scaling state by lambda = 2^k commutes with every rounding in the
  // binning arithmetic, so centers, y1 and y2 must transform exactly.
  const int n = 2000;
  const double lambda = 4.0;
  std::vector<double> x(n), dx(n), xs(n), dxs(n);
  for (int i = 0; i < n; ++i) {
    x[i] = -1.5 + 3.5 * uniform_draw(23, 0, static_cast<std::uint64_t>(i));
    dx[i] = 0.3 * normal_draw(23, 1, static_cast<std::uint64_t>(i));
    xs[i] = lambda * x[i];
    dxs[i] = lambda * dx[i];
  }
  BinningConfig cfg;
  cfg.n_bins = 8;
  cfg.min_count = 10;
  cfg.range = {{-1.5, 2.0}};
  BinningConfig cfg_scaled = cfg;
  cfg_scaled.range = {{-1.5 * lambda, 2.0 * lambda}};
  BinnedMoments a = bin_moments(make_pairs(x, dx, 0.01), cfg);
  BinnedMoments s = bin_moments(make_pairs(xs, dxs, 0.01), cfg_scaled);
  REQUIRE(a.centers.size() == s.centers.size());
  CHECK(a.dropped_pairs == s.dropped_pairs);
  for (Eigen::Index r = 0; r < a.centers.size(); ++r) {
    CHECK(s.centers[r] == lambda * a.centers[r]);
    CHECK(s.y1[r] == lambda * a.y1[r]);
    CHECK(s.y2[r] == lambda * lambda * a.y2[r]);
    CHECK(s.counts[r] == a.counts[r]);
  }
}

TEST_CASE("auto range trims tail excursions") {
  std::vector<double> x, dx;
  for (int i = 0; i < 996; ++i) {
    x.push_back(uniform_draw(5, 0, static_cast<std::uint64_t>(i)));
    dx.push_back(1.0);
  }
  x.push_back(-60.0);
  x.push_back(-60.0);
  x.push_back(60.0);
  x.push_back(60.0);
  for (int i = 0; i < 4; ++i) dx.push_back(1.0);
  BinningConfig cfg;
  cfg.n_bins = 10;
  cfg.min_count = 1;
  BinnedMoments b = bin_moments(make_pairs(x, dx, 1.0), cfg);
  CHECK(b.dropped_pairs >= 4);
  long kept = 0;
  for (long c : b.counts) kept += c;
  CHECK(kept + b.dropped_pairs == 1000);
  for (Eigen::Index r = 0; r < b.centers.size(); ++r) {
    CHECK(b.centers[r] > -1.0);
    CHECK(b.centers[r] < 2.0);
  }
}

TEST_CASE("degenerate configurations raise numeric errors") {
  IncrementPairs p = make_pairs({0.1, 0.9}, {1.0, 1.0}, 1.0);
  BinningConfig cfg;
  cfg.n_bins = 1;
  CHECK_THROWS_AS(bin_moments(p, cfg), numeric_error);
  cfg = BinningConfig{};
  cfg.min_count = 100;
  CHECK_THROWS_AS(bin_moments(p, cfg), numeric_error);  // every bin underfilled
  cfg = BinningConfig{};
  cfg.range = {{1.0, 1.0}};
  CHECK_THROWS_AS(bin_moments(p, cfg), numeric_error);  // zero-width range
  IncrementPairs constant = make_pairs({0.5, 0.5, 0.5}, {1.0, 1.0, 1.0}, 1.0);
  BinningConfig auto_cfg;
  auto_cfg.min_count = 1;
  CHECK_THROWS_AS(bin_moments(constant, auto_cfg), numeric_error);  // auto range collapses
  CHECK_THROWS_AS(bin_moments(IncrementPairs{}, BinningConfig{}), config_error);
}

TEST_CASE("second-moment sampling bias scales linearly with dt") {
  // One Euler step gives E[dx^2 | x] / dt = sigma^2 + f(x)^2 dt exactly, so
  // halving dt must halve the measured y2 excess over sigma^2.
  SdeModel ou = make_model({0.0, -1.0}, {1.0});
  auto excess = [&](double dt, long n_steps) {
    SimulationConfig s;
    s.dt = dt;
    s.n_steps = n_steps;
    s.n_paths = 200;
    s.x0.is_uniform = true;
    s.x0.lo = -2.0;
    s.x0.hi = 2.0;
    s.seed = 99;
    s.threads = 4;
    BinningConfig cfg;
    cfg.n_bins = 8;
    cfg.min_count = 500;
    cfg.range = {{-1.6, 1.6}};
    BinnedMoments b = bin_moments(extract_pairs(simulate_em(ou, s)), cfg);
    double num = 0.0, den = 0.0;
    for (Eigen::Index r = 0; r < b.centers.size(); ++r) {
      num += static_cast<double>(b.counts[r]) * (b.y2[r] - 1.0);
      den += static_cast<double>(b.counts[r]);
    }
    return num / den;
  };
  double e1 = excess(0.05, 5000);
  double e2 = excess(0.025, 10000);
  CHECK(e1 > 0.0);
  CHECK(e2 > 0.0);
  CHECK(e1 / e2 > 1.6);
  CHECK(e1 / e2 < 2.5);
}

}  // TEST_SUITE
