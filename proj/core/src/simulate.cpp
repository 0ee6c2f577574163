#include "kmpath/simulate.hpp"

#include <cmath>
#include <sstream>
#include <thread>
#include <vector>

#include "kmpath/errors.hpp"
#include "kmpath/rng.hpp"

namespace kmpath {

namespace {

void check_sim_config(const SimulationConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw config_error("simulate: dt must be > 0");
  if (cfg.n_steps <= 0) throw config_error("simulate: n_steps must be positive");
  if (cfg.n_paths <= 0) throw config_error("simulate: n_paths must be positive");
  if (!std::isfinite(cfg.dt * static_cast<double>(cfg.n_steps)))
    throw config_error("simulate: horizon dt*n_steps is not finite");
  if (cfg.x0.is_uniform && !(cfg.x0.lo < cfg.x0.hi))
    throw config_error("simulate: x0 range must satisfy lo < hi");
  if (cfg.domain_clip && !(cfg.domain_clip->first < cfg.domain_clip->second))
    throw config_error("simulate: domain_clip must satisfy x_min < x_max");
}

void run_paths(const SdeModel& model, const SimulationConfig& cfg, int p_begin, int p_end,
               Eigen::MatrixXd& paths, std::string& failure) {
  const double sqrt_dt = std::sqrt(cfg.dt);
  try {
    for (int p = p_begin; p < p_end; ++p) {
      const std::uint64_t pid = static_cast<std::uint64_t>(p);
      double x = cfg.x0.is_uniform
                     ? cfg.x0.lo + (cfg.x0.hi - cfg.x0.lo) * uniform_draw(cfg.seed, pid, kInitStep)
                     : cfg.x0.value;
      paths(p, 0) = x;
      for (long k = 0; k < cfg.n_steps; ++k) {
        const double s2 = model.sigma2(x);
        if (s2 < 0.0) {
          std::ostringstream os;
          os << "simulate: sigma^2(" << x << ") < 0 on path " << p << " at step " << k;
          throw numeric_error(os.str());
        }
        const double xi = normal_draw(cfg.seed, pid, static_cast<std::uint64_t>(k));
        x += model.f(x) * cfg.dt + std::sqrt(s2) * sqrt_dt * xi;
        // The divergence bound applies only without a clip window, but
        // stored states must stay finite either way.
        if (!std::isfinite(x) || (!cfg.domain_clip && std::abs(x) > kDivergenceBound)) {
          std::ostringstream os;
          os << "simulate: path " << p << " diverged at step " << (k + 1) << " (|X| > 1e6)";
          throw numeric_error(os.str());
        }
        paths(p, k + 1) = x;
      }
    }
  } catch (const std::exception& e) {
    // First failure wins; harvested by the caller after join.
    if (failure.empty()) failure = e.what();
  }
}

}  // namespace

TrajectorySet simulate_em(const SdeModel& model, const SimulationConfig& cfg) {
  check_sim_config(cfg);

  TrajectorySet out;
  out.dt = cfg.dt;
  out.seed = cfg.seed;
  out.domain_clip = cfg.domain_clip;
  out.paths.resize(cfg.n_paths, cfg.n_steps + 1);

  const int n_workers = std::max(1, std::min(cfg.threads, cfg.n_paths));
  if (n_workers == 1) {
    std::string failure;
    run_paths(model, cfg, 0, cfg.n_paths, out.paths, failure);
    if (!failure.empty()) throw numeric_error(failure);
  } else {
    // Paths write disjoint rows, so workers share the matrix safely.
    std::vector<std::string> failures(n_workers);
    std::vector<std::thread> workers;
    const int chunk = (cfg.n_paths + n_workers - 1) / n_workers;
    for (int w = 0; w < n_workers; ++w) {
      const int b = w * chunk;
      const int e = std::min(cfg.n_paths, b + chunk);
      if (b >= e) break;
      workers.emplace_back(run_paths, std::cref(model), std::cref(cfg), b, e,
                           std::ref(out.paths), std::ref(failures[w]));
    }
    for (auto& t : workers) t.join();
    for (const auto& f : failures)
      if (!f.empty()) throw numeric_error(f);
  }
  return out;
}

IncrementPairs extract_pairs(const TrajectorySet& traj) {
  const Eigen::Index n_paths = traj.paths.rows();
  const Eigen::Index n_cols = traj.paths.cols();
  if (n_cols < 2) throw config_error("extract_pairs: paths need at least 2 points");

  std::vector<double> xs, dxs;
  xs.reserve(static_cast<std::size_t>(n_paths * (n_cols - 1)));
  dxs.reserve(xs.capacity());
  for (Eigen::Index p = 0; p < n_paths; ++p) {
    for (Eigen::Index k = 0; k + 1 < n_cols; ++k) {
      const double x = traj.paths(p, k);
      if (traj.domain_clip && (x < traj.domain_clip->first || x > traj.domain_clip->second))
        continue;
      xs.push_back(x);
      dxs.push_back(traj.paths(p, k + 1) - x);
    }
  }

  IncrementPairs out;
  out.delta_t = traj.dt;
  out.x = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  out.dx = Eigen::Map<Eigen::VectorXd>(dxs.data(), static_cast<Eigen::Index>(dxs.size()));
  return out;
}

}  // namespace kmpath
