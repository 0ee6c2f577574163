#include "kmpath/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kmpath/errors.hpp"

namespace kmpath {

int PdeGrid::nearest_node(double x) const {
  const int j = static_cast<int>(std::lround((x - x_lo) / dx()));
  return std::clamp(j, 0, n_x - 1);
}

Eigen::VectorXd PdeGrid::nodes() const {
  Eigen::VectorXd xs(n_x);
  for (int j = 0; j < n_x; ++j) xs(j) = node(j);
  return xs;
}

Eigen::VectorXd PdeGrid::cell_widths() const {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n_x, dx());
  w(0) *= 0.5;
  w(n_x - 1) *= 0.5;
  return w;
}

void PdeGrid::validate() const {
  if (!(x_hi > x_lo)) throw config_error("pde grid: x_hi must exceed x_lo");
  if (n_x < 3) throw config_error("pde grid: need at least 3 spatial nodes");
  if (!(t_f > 0.0)) throw config_error("pde grid: horizon t_f must be positive");
  if (n_t < 1) throw config_error("pde grid: need at least 1 time step");
  if (!std::isfinite(x_lo) || !std::isfinite(x_hi) || !std::isfinite(t_f)) {
    throw config_error("pde grid: non-finite extent");
  }
}

double bernoulli_ratio(double z) {
  if (z > 700.0) return 0.0;   // e^z overflows; the ratio limit is 0
  if (z < -700.0) return -z;   // e^z underflows; z / (0 - 1) = -z
  if (std::abs(z) < 1e-5) return 1.0 - z / 2.0 + z * z / 12.0;
  return z / std::expm1(z);
}

Eigen::VectorXd thomas_solve(const Eigen::VectorXd& lo, const Eigen::VectorXd& di,
                             const Eigen::VectorXd& up, const Eigen::VectorXd& rhs) {
  const Eigen::Index n = di.size();
  Eigen::VectorXd c(n), d(n);
  double pivot = di(0);
  if (pivot == 0.0) throw numeric_error("tridiagonal solve: zero pivot at row 0");
  c(0) = up(0) / pivot;
  d(0) = rhs(0) / pivot;
  for (Eigen::Index i = 1; i < n; ++i) {
    pivot = di(i) - lo(i) * c(i - 1);
    if (pivot == 0.0) {
      throw numeric_error("tridiagonal solve: zero pivot at row " + std::to_string(i));
    }
    c(i) = up(i) / pivot;
    d(i) = (rhs(i) - lo(i) * d(i - 1)) / pivot;
  }
  Eigen::VectorXd x(n);
  x(n - 1) = d(n - 1);
  for (Eigen::Index i = n - 2; i >= 0; --i) x(i) = d(i) - c(i) * x(i + 1);
  return x;
}

namespace {

// Semi-discrete system W dQ/dt = L Q with L tridiagonal. Row j of L reads
// lo(j) Q_{j-1} + di(j) Q_j + up(j) Q_{j+1}; lo(0) and up(n_x-1) stay zero.
struct SpatialOps {
  Eigen::VectorXd lo, di, up;
  Eigen::VectorXd w;
  int clamped_faces = 0;
  double clamp_lo = 0.0;
  double clamp_hi = 0.0;
};

SpatialOps build_ops(const SdeModel& model, const PdeGrid& grid) {
  const int nx = grid.n_x;
  const double dx = grid.dx();
  SpatialOps ops;
  ops.lo = Eigen::VectorXd::Zero(nx);
  ops.di = Eigen::VectorXd::Zero(nx);
  ops.up = Eigen::VectorXd::Zero(nx);
  ops.w = grid.cell_widths();
  for (int j = 0; j + 1 < nx; ++j) {
    const double xf = 0.5 * (grid.node(j) + grid.node(j + 1));
    const double s2 = model.sigma2(xf);
    if (s2 < kDiffusionFloor) {
      if (ops.clamped_faces == 0) ops.clamp_lo = xf;
      ops.clamp_hi = xf;
      ++ops.clamped_faces;
    }
    const double diff = 0.5 * std::max(s2, kDiffusionFloor);
    const double adv = model.f(xf) - 0.5 * model.sigma2_prime(xf);
    const double peclet = adv * dx / diff;
    // Flux through face j+1/2: c_left Q_j + c_right Q_{j+1}. The Bernoulli
    // form keeps c_left >= 0 >= c_right exactly, so both implicit matrices
    // below are M-matrices and the solve cannot manufacture sign changes.
    const double c_left = (diff / dx) * bernoulli_ratio(-peclet);
    const double c_right = -(diff / dx) * bernoulli_ratio(peclet);
    ops.di(j) -= c_left;
    ops.up(j) -= c_right;
    ops.lo(j + 1) += c_left;
    ops.di(j + 1) += c_right;
  }
  return ops;
}

bool implicit_euler_step(int m, int n_t) {
  return m < kDeltaDampSteps || m >= n_t - kDeltaDampSteps;
}

// One time step of (W - a L) v_next = W v + b L v with (a, b) = (h, 0) for
// implicit Euler and (h/2, h/2) for Crank-Nicolson.
Eigen::VectorXd advance(const Eigen::VectorXd& lo, const Eigen::VectorXd& di,
                        const Eigen::VectorXd& up, const Eigen::VectorXd& w,
                        const Eigen::VectorXd& v, double a, double b) {
  const Eigen::Index n = v.size();
  Eigen::VectorXd rhs = w.cwiseProduct(v);
  if (b != 0.0) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double lv = di(j) * v(j);
      if (j > 0) lv += lo(j) * v(j - 1);
      if (j + 1 < n) lv += up(j) * v(j + 1);
      rhs(j) += b * lv;
    }
  }
  return thomas_solve(-a * lo, w - a * di, -a * up, rhs);
}

void fill_advection_diagnostics(const SdeModel& model, const PdeGrid& grid,
                                SolveDiagnostics& diag) {
  double fmax = 0.0;
  for (int j = 0; j < grid.n_x; ++j) fmax = std::max(fmax, std::abs(model.f(grid.node(j))));
  diag.advection_number = grid.dt() * fmax / grid.dx();
  diag.advection_warning = diag.advection_number > kAdvectionWarnThreshold;
}

int interior_delta_node(const PdeGrid& grid, double x, const char* label) {
  if (!(x > grid.x_lo && x < grid.x_hi)) {
    throw config_error(std::string(label) + " must lie strictly inside the grid domain");
  }
  const int j = grid.nearest_node(x);
  if (j <= 0 || j >= grid.n_x - 1) {
    throw config_error(std::string(label) + " maps to a boundary node; widen the domain");
  }
  return j;
}

}  // namespace

DensityField solve_forward(const SdeModel& model, double x0, const PdeGrid& grid,
                           SolveDiagnostics* diag) {
  grid.validate();
  const int nx = grid.n_x;
  const int nt = grid.n_t;
  const double h = grid.dt();
  const SpatialOps ops = build_ops(model, grid);

  SolveDiagnostics local;
  local.clamped_faces = ops.clamped_faces;
  local.clamp_lo = ops.clamp_lo;
  local.clamp_hi = ops.clamp_hi;
  fill_advection_diagnostics(model, grid, local);

  const int j0 = interior_delta_node(grid, x0, "forward solver: x0");
  Eigen::VectorXd q = Eigen::VectorXd::Zero(nx);
  q(j0) = 1.0 / grid.dx();

  DensityField field;
  field.grid = grid;
  field.kind = FieldKind::kForward;
  field.values.resize(nt + 1, nx);

  // Checks run on the raw state; the stored rows clamp rounding-level
  // negatives to zero.
  auto check_and_store = [&](int m, const Eigen::VectorXd& v) {
    const double vmin = v.minCoeff();
    local.min_value = std::min(local.min_value, vmin);
    if (vmin < kNegativeFloor) {
      throw numeric_error("forward solver failure: density " + std::to_string(vmin) +
                          " at time level " + std::to_string(m));
    }
    const double mass_err = std::abs(ops.w.dot(v) - 1.0);
    local.max_mass_error = std::max(local.max_mass_error, mass_err);
    if (mass_err > kMassTolerance) {
      throw numeric_error("forward solver failure: mass drifted by " +
                          std::to_string(mass_err) + " at time level " + std::to_string(m));
    }
    field.values.row(m) = v.cwiseMax(0.0).transpose();
  };

  check_and_store(0, q);
  for (int m = 0; m < nt; ++m) {
    const double a = implicit_euler_step(m, nt) ? h : 0.5 * h;
    const double b = implicit_euler_step(m, nt) ? 0.0 : 0.5 * h;
    q = advance(ops.lo, ops.di, ops.up, ops.w, q, a, b);
    check_and_store(m + 1, q);
  }
  if (diag) *diag = local;
  return field;
}

DensityField solve_backward(const SdeModel& model, double xf, const PdeGrid& grid,
                            SolveDiagnostics* diag) {
  grid.validate();
  const int nx = grid.n_x;
  const int nt = grid.n_t;
  const double h = grid.dt();
  const SpatialOps ops = build_ops(model, grid);

  SolveDiagnostics local;
  local.clamped_faces = ops.clamped_faces;
  local.clamp_lo = ops.clamp_lo;
  local.clamp_hi = ops.clamp_hi;
  fill_advection_diagnostics(model, grid, local);

  // Transpose couplings: (L^T)_{j,j-1} = up_{j-1}, (L^T)_{j,j+1} = lo_{j+1}.
  Eigen::VectorXd tlo = Eigen::VectorXd::Zero(nx);
  Eigen::VectorXd tup = Eigen::VectorXd::Zero(nx);
  tlo.tail(nx - 1) = ops.up.head(nx - 1);
  tup.head(nx - 1) = ops.lo.tail(nx - 1);

  const int jf = interior_delta_node(grid, xf, "backward solver: xf");
  Eigen::VectorXd u = Eigen::VectorXd::Zero(nx);
  u(jf) = 1.0 / grid.dx();

  DensityField field;
  field.grid = grid;
  field.kind = FieldKind::kBackward;
  field.values.resize(nt + 1, nx);

  auto check_and_store = [&](int m, const Eigen::VectorXd& v) {
    const double vmin = v.minCoeff();
    local.min_value = std::min(local.min_value, vmin);
    if (vmin < kNegativeFloor) {
      throw numeric_error("backward solver failure: value " + std::to_string(vmin) +
                          " at time level " + std::to_string(m));
    }
    field.values.row(m) = v.cwiseMax(0.0).transpose();
  };

  check_and_store(nt, u);
  // Stepping level m+1 -> m with the scheme of forward step m keeps the
  // pair exact discrete adjoints, so u^T W q is constant across levels.
  for (int m = nt - 1; m >= 0; --m) {
    const double a = implicit_euler_step(m, nt) ? h : 0.5 * h;
    const double b = implicit_euler_step(m, nt) ? 0.0 : 0.5 * h;
    u = advance(tlo, ops.di, tup, ops.w, u, a, b);
    check_and_store(m, u);
  }
  if (diag) *diag = local;
  return field;
}

}  // namespace kmpath
