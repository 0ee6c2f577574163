#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>

#include "kmpath/sde_model.hpp"

namespace kmpath {

// Initial condition: fixed value, or uniform over [lo, hi].
struct X0Sampler {
  bool is_uniform = false;
  double value = 0.0;  // fixed
  double lo = 0.0, hi = 0.0;
};

struct SimulationConfig {
  double dt = 1e-3;
  long n_steps = 10000;
  int n_paths = 100;
  X0Sampler x0;
  std::uint64_t seed = 0;
  std::optional<std::pair<double, double>> domain_clip;
  int threads = 1;
};

struct TrajectorySet {
  // Row p = path p, column k = state at time k*dt. (n_paths) x (n_steps+1).
  Eigen::MatrixXd paths;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::pair<double, double>> domain_clip;
};

struct IncrementPairs {
  Eigen::VectorXd x;   // states at pair start
  Eigen::VectorXd dx;  // one-step increments
  double delta_t = 0.0;
};

inline constexpr double kDivergenceBound = 1e6;

// Euler-Maruyama: X_{k+1} = X_k + f(X_k) dt + sqrt(sigma^2(X_k) dt) xi_k.
// Bit-reproducible for fixed (model, cfg) and independent per path; the
// worker-thread count never changes the result. Throws numeric_error when
// |X| exceeds 1e6 without a domain_clip (naming path and step) or when
// sigma^2 goes negative at a visited state.
TrajectorySet simulate_em(const SdeModel& model, const SimulationConfig& cfg);

// Concatenates consecutive (X_k, X_{k+1}-X_k) over all paths. Pairs whose
// start lies outside domain_clip are dropped.
IncrementPairs extract_pairs(const TrajectorySet& traj);

}  // namespace kmpath
