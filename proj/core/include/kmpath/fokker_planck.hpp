#pragma once

#include <Eigen/Dense>

#include "kmpath/sde_model.hpp"

namespace kmpath {

// Diffusion clamp floor applied at cell faces; keeps the discretization
// non-degenerate where sigma^2 approaches zero without disturbing the
// extracted path (the path is insensitive to the floor over a wide range
// because the corridor attenuation it regularizes is already negligible).
inline constexpr double kDiffusionFloor = 1e-2;

// Forward-field trapezoid mass must stay within this of 1 at every level.
inline constexpr double kMassTolerance = 1e-4;

// Values below this are a solver failure; anything in (kNegativeFloor, 0)
// is clamped to zero on output.
inline constexpr double kNegativeFloor = -1e-10;

// Delta initial data rings under Crank-Nicolson; the first and last few
// steps of both solvers run implicit Euler instead. Using the same scheme
// at matching step indices makes the backward solve the exact discrete
// adjoint of the forward one, so duality products are constant to
// rounding.
inline constexpr int kDeltaDampSteps = 4;

// Advection resolution diagnostic: warn when dt * max|f| / dx exceeds this.
inline constexpr double kAdvectionWarnThreshold = 5.0;

struct PdeGrid {
  double x_lo = -6.0;
  double x_hi = 6.0;
  int n_x = 401;
  double t_f = 1.0;
  int n_t = 34;

  double dx() const { return (x_hi - x_lo) / (n_x - 1); }
  double dt() const { return t_f / n_t; }
  double node(int j) const { return x_lo + j * dx(); }
  int nearest_node(double x) const;
  Eigen::VectorXd nodes() const;
  // Dual-cell widths: dx at interior nodes, dx/2 at the two boundary nodes.
  // Doubles as the trapezoid quadrature weight vector.
  Eigen::VectorXd cell_widths() const;
  void validate() const;
};

enum class FieldKind { kForward, kBackward };

struct DensityField {
  PdeGrid grid;
  // Row m holds the field at time level m, m = 0 .. n_t.
  Eigen::MatrixXd values;
  FieldKind kind = FieldKind::kForward;
};

struct SolveDiagnostics {
  int clamped_faces = 0;
  double clamp_lo = 0.0;  // extent of the clamped face region,
  double clamp_hi = 0.0;  // meaningful only when clamped_faces > 0
  double advection_number = 0.0;
  bool advection_warning = false;
  double max_mass_error = 0.0;  // forward solves only
  double min_value = 0.0;       // most negative value before output clamping
};

// z / (e^z - 1), guarded against overflow and cancellation. Nonnegative for
// all z, which keeps the flux matrix an M-matrix in floating point.
double bernoulli_ratio(double z);

// Tridiagonal solve by the Thomas algorithm; lo[0] and up[n-1] are ignored.
Eigen::VectorXd thomas_solve(const Eigen::VectorXd& lo, const Eigen::VectorXd& di,
                             const Eigen::VectorXd& up, const Eigen::VectorXd& rhs);

// Forward Fokker-Planck solve for Q(x, t | x0, 0): finite-volume fluxes of
// Scharfetter-Gummel type, zero-flux boundaries, delta initial condition of
// mass 1/dx at the node nearest x0.
DensityField solve_forward(const SdeModel& model, double x0, const PdeGrid& grid,
                           SolveDiagnostics* diag = nullptr);

// Backward Kolmogorov solve for Q(xf, tf | x, t), stepped as the exact
// per-step transpose of the forward scheme.
DensityField solve_backward(const SdeModel& model, double xf, const PdeGrid& grid,
                            SolveDiagnostics* diag = nullptr);

}  // namespace kmpath
