#pragma once

#include <Eigen/Dense>
#include <vector>

#include "kmpath/fokker_planck.hpp"
#include "kmpath/sde_model.hpp"

namespace kmpath {

// Interior time levels of the pinned density must integrate to 1 within
// this; a Chapman-Kolmogorov consequence that doubles as a solver check.
inline constexpr double kInteriorMassTolerance = 1e-2;

// Normalizers at or below this mean the endpoint is effectively
// unreachable at the given horizon.
inline constexpr double kNormalizerFloor = 1e-300;

// Relative gap under which two grid maxima count as a tie.
inline constexpr double kTieTolerance = 1e-12;

struct PathProblem {
  double x0 = 0.0;
  double xf = 0.0;
  double tf = 1.0;
};

struct ConditionalDensity {
  PdeGrid grid;
  double x0 = 0.0;
  double xf = 0.0;
  // Row m holds P_A(x, t_m); rows 0 and n_t are the pinning deltas.
  Eigen::MatrixXd values;
  double normalizer = 0.0;
  double interior_mass_lo = 0.0;
  double interior_mass_hi = 0.0;
  std::vector<int> tie_levels;
};

struct TransitionPath {
  std::vector<double> t;
  std::vector<double> x_m;
  std::vector<double> peak_density;
  std::vector<int> tie_levels;
};

struct PathDiagnostics {
  double normalizer = 0.0;
  double interior_mass_lo = 0.0;
  double interior_mass_hi = 0.0;
  std::vector<int> tie_levels;
  SolveDiagnostics forward;
  SolveDiagnostics backward;
};

// P_A(x,t) = backward * forward / normalizer, the normalizer being the
// trapezoid integral of the product at the first stored level after 0
// (the delta-delta product at level 0 is 0/0). Endpoint levels are stored
// as grid deltas at x0 and xf.
ConditionalDensity conditional_density(const DensityField& forward, const DensityField& backward,
                                       const PathProblem& problem);

// Per level: leftmost grid argmax, refined by the vertex of the parabola
// through the peak node and its neighbors; endpoints pinned to x0 and xf.
TransitionPath most_probable_path(const ConditionalDensity& pa);

// Composes solve_forward, solve_backward, conditional_density and
// most_probable_path for one model and pinning problem.
TransitionPath path_for_learned_model(const SdeModel& model, const PathProblem& problem,
                                      const PdeGrid& grid, PathDiagnostics* diag = nullptr);

}  // namespace kmpath
