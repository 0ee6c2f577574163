#include "kmpath/transition_path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "kmpath/errors.hpp"

namespace kmpath {

namespace {

bool same_grid(const PdeGrid& a, const PdeGrid& b) {
  return a.x_lo == b.x_lo && a.x_hi == b.x_hi && a.n_x == b.n_x && a.t_f == b.t_f &&
         a.n_t == b.n_t;
}

void validate_problem(const PathProblem& problem, const PdeGrid& grid) {
  if (!(problem.tf > 0.0)) throw config_error("path problem: tf must be positive");
  if (problem.tf != grid.t_f) {
    throw config_error("path problem: tf does not match the grid horizon");
  }
  if (!(problem.x0 > grid.x_lo && problem.x0 < grid.x_hi)) {
    throw config_error("path problem: x0 must lie strictly inside the grid domain");
  }
  if (!(problem.xf > grid.x_lo && problem.xf < grid.x_hi)) {
    throw config_error("path problem: xf must lie strictly inside the grid domain");
  }
}

void place_delta(Eigen::MatrixXd& values, int row, const PdeGrid& grid, double x) {
  values.row(row).setZero();
  values(row, grid.nearest_node(x)) = 1.0 / grid.dx();
}

}  // namespace

ConditionalDensity conditional_density(const DensityField& forward, const DensityField& backward,
                                       const PathProblem& problem) {
  if (forward.kind != FieldKind::kForward || backward.kind != FieldKind::kBackward) {
    throw config_error("conditional density: fields passed in the wrong order");
  }
  if (!same_grid(forward.grid, backward.grid)) {
    throw config_error("conditional density: forward and backward grids differ");
  }
  const PdeGrid& grid = forward.grid;
  validate_problem(problem, grid);
  const int nt = grid.n_t;
  if (nt < 2) throw config_error("conditional density: need at least 2 time steps");

  const Eigen::VectorXd w = grid.cell_widths();
  ConditionalDensity pa;
  pa.grid = grid;
  pa.x0 = problem.x0;
  pa.xf = problem.xf;
  pa.values.resize(nt + 1, grid.n_x);

  // Chapman-Kolmogorov gives the same normalizer at every level; the first
  // level after 0 is the earliest one where both factors are resolved.
  const Eigen::VectorXd product1 =
      backward.values.row(1).cwiseProduct(forward.values.row(1)).transpose();
  pa.normalizer = w.dot(product1);
  if (!(pa.normalizer > kNormalizerFloor)) {
    std::ostringstream msg;
    msg << "unreachable endpoint: transition probability normalizer " << pa.normalizer
        << " vanishes at this horizon";
    throw numeric_error(msg.str());
  }

  place_delta(pa.values, 0, grid, problem.x0);
  place_delta(pa.values, nt, grid, problem.xf);

  pa.interior_mass_lo = std::numeric_limits<double>::infinity();
  pa.interior_mass_hi = -std::numeric_limits<double>::infinity();
  for (int m = 1; m < nt; ++m) {
    const Eigen::VectorXd v =
        backward.values.row(m).cwiseProduct(forward.values.row(m)).transpose() / pa.normalizer;
    pa.values.row(m) = v.transpose();
    const double mass = w.dot(v);
    pa.interior_mass_lo = std::min(pa.interior_mass_lo, mass);
    pa.interior_mass_hi = std::max(pa.interior_mass_hi, mass);
    if (std::abs(mass - 1.0) > kInteriorMassTolerance) {
      throw numeric_error("conditional density: interior mass " + std::to_string(mass) +
                          " at time level " + std::to_string(m) +
                          " violates the Chapman-Kolmogorov invariant");
    }
    const double vmax = v.maxCoeff();
    if (vmax > 0.0) {
      int near_max = 0;
      for (int j = 0; j < grid.n_x; ++j) {
        if (vmax - v(j) <= kTieTolerance * vmax) ++near_max;
      }
      if (near_max > 1) pa.tie_levels.push_back(m);
    }
  }
  return pa;
}

namespace {

struct RefinedPeak {
  double x = 0.0;
  double value = 0.0;
};

RefinedPeak refine_peak(const Eigen::VectorXd& v, int j, const PdeGrid& grid) {
  RefinedPeak peak{grid.node(j), v(j)};
  if (j == 0 || j == grid.n_x - 1) return peak;
  // Vertex of the parabola through the three nodes around the maximum. A
  // nonnegative second difference means no interior vertex; keep the node.
  const double den = v(j - 1) - 2.0 * v(j) + v(j + 1);
  if (den >= 0.0) return peak;
  const double offset = 0.5 * (v(j - 1) - v(j + 1)) / den;
  peak.x = grid.node(j) + offset * grid.dx();
  peak.value = v(j) - 0.25 * (v(j - 1) - v(j + 1)) * offset;
  return peak;
}

}  // namespace

TransitionPath most_probable_path(const ConditionalDensity& pa) {
  const PdeGrid& grid = pa.grid;
  const int nt = grid.n_t;
  TransitionPath path;
  path.t.resize(nt + 1);
  path.x_m.resize(nt + 1);
  path.peak_density.resize(nt + 1);
  path.tie_levels = pa.tie_levels;
  for (int m = 0; m <= nt; ++m) {
    path.t[m] = (m == nt) ? grid.t_f : m * grid.dt();
    const Eigen::VectorXd v = pa.values.row(m).transpose();
    int jmax = 0;
    for (int j = 1; j < grid.n_x; ++j) {
      if (v(j) > v(jmax)) jmax = j;  // strict: ties keep the leftmost node
    }
    const RefinedPeak peak = refine_peak(v, jmax, grid);
    path.x_m[m] = peak.x;
    path.peak_density[m] = peak.value;
  }
  // Pinning conditions hold exactly, not just to grid resolution.
  path.x_m[0] = pa.x0;
  path.x_m[nt] = pa.xf;
  return path;
}

TransitionPath path_for_learned_model(const SdeModel& model, const PathProblem& problem,
                                      const PdeGrid& grid, PathDiagnostics* diag) {
  PathDiagnostics local;
  const DensityField forward = solve_forward(model, problem.x0, grid, &local.forward);
  const DensityField backward = solve_backward(model, problem.xf, grid, &local.backward);
  const ConditionalDensity pa = conditional_density(forward, backward, problem);
  local.normalizer = pa.normalizer;
  local.interior_mass_lo = pa.interior_mass_lo;
  local.interior_mass_hi = pa.interior_mass_hi;
  local.tie_levels = pa.tie_levels;
  if (diag) *diag = local;
  return most_probable_path(pa);
}

}  // namespace kmpath
