#include "kmpath/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kmpath/errors.hpp"
#include "kmpath/polynomial.hpp"
#include "kmpath/rng.hpp"

namespace kmpath {

Eigen::VectorXd least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) {
    throw config_error("least_squares: X has " + std::to_string(X.rows()) +
                       " rows but y has " + std::to_string(y.size()) + " entries");
  }
  if (X.rows() < X.cols()) {
    throw numeric_error("least_squares: underdetermined system (" + std::to_string(X.rows()) +
                        " rows < " + std::to_string(X.cols()) + " columns)");
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X);
  return cod.solve(y);
}

namespace {

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& X, const std::vector<int>& cols) {
  Eigen::MatrixXd sub(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = X.col(cols[j]);
  return sub;
}

Eigen::VectorXd fit_active(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const std::vector<int>& active_set) {
  return least_squares(select_columns(X, active_set), y);
}

Eigen::VectorXd scatter(const Eigen::VectorXd& b_active, const std::vector<int>& active_set,
                        Eigen::Index m) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(m);
  for (std::size_t j = 0; j < active_set.size(); ++j) full(active_set[j]) = b_active(static_cast<Eigen::Index>(j));
  return full;
}

}  // namespace

std::vector<int> ssr_step(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const std::vector<int>& active_set) {
  if (active_set.size() < 2) {
    throw config_error("ssr_step: active set must have at least two terms to eliminate one");
  }
  const Eigen::VectorXd b = fit_active(X, y, active_set);
  std::size_t drop = 0;
  double best = std::abs(b(0));
  for (std::size_t j = 1; j < active_set.size(); ++j) {
    const double mag = std::abs(b(static_cast<Eigen::Index>(j)));
    if (mag < best) {  // strict: ties keep the earliest (lowest index) candidate
      best = mag;
      drop = j;
    }
  }
  std::vector<int> next;
  next.reserve(active_set.size() - 1);
  for (std::size_t j = 0; j < active_set.size(); ++j) {
    if (j != drop) next.push_back(active_set[j]);
  }
  return next;
}

SparsityPath ssr_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index m = X.cols();
  if (m == 0) throw config_error("ssr_path: empty dictionary");
  SparsityPath path;
  path.solutions.reserve(static_cast<std::size_t>(m));
  std::vector<int> active(static_cast<std::size_t>(m));
  std::iota(active.begin(), active.end(), 0);
  for (Eigen::Index q = 0; q < m; ++q) {
    SparsityPath::Level level;
    level.active_set = active;
    level.coeffs = scatter(fit_active(X, y, active), active, m);
    path.solutions.push_back(std::move(level));
    if (static_cast<Eigen::Index>(active.size()) > 1) active = ssr_step(X, y, active);
  }
  return path;
}

std::vector<std::vector<int>> make_folds(int n_rows, int k, std::uint64_t fold_seed) {
  if (k < 2) throw config_error("make_folds: k must be at least 2");
  if (n_rows < k) {
    throw numeric_error("make_folds: insufficient data (" + std::to_string(n_rows) +
                        " rows for " + std::to_string(k) + " folds)");
  }
  std::vector<int> order(static_cast<std::size_t>(n_rows));
  std::iota(order.begin(), order.end(), 0);
  // splitmix64-driven Fisher-Yates keeps the partition identical across
  // platforms and standard library implementations.
  std::uint64_t state = fold_seed;
  for (int i = n_rows - 1; i > 0; --i) {
    const std::uint64_t r = splitmix64(state);
    const int j = static_cast<int>(r % static_cast<std::uint64_t>(i + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
  const int base = n_rows / k;
  const int extra = n_rows % k;
  int pos = 0;
  for (int i = 0; i < k; ++i) {
    const int len = base + (i < extra ? 1 : 0);
    folds[static_cast<std::size_t>(i)].assign(order.begin() + pos, order.begin() + pos + len);
    pos += len;
  }
  return folds;
}

namespace {

struct FoldSplit {
  Eigen::MatrixXd x_train;
  Eigen::VectorXd y_train;
  Eigen::MatrixXd x_test;
  Eigen::VectorXd y_test;
};

FoldSplit split_fold(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const std::vector<std::vector<int>>& folds, std::size_t i) {
  const std::vector<int>& test_rows = folds[i];
  std::vector<char> in_test(static_cast<std::size_t>(X.rows()), 0);
  for (int r : test_rows) in_test[static_cast<std::size_t>(r)] = 1;
  FoldSplit s;
  const Eigen::Index n_test = static_cast<Eigen::Index>(test_rows.size());
  const Eigen::Index n_train = X.rows() - n_test;
  s.x_train.resize(n_train, X.cols());
  s.y_train.resize(n_train);
  s.x_test.resize(n_test, X.cols());
  s.y_test.resize(n_test);
  Eigen::Index it = 0;
  Eigen::Index ir = 0;
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    if (in_test[static_cast<std::size_t>(r)]) {
      s.x_test.row(it) = X.row(r);
      s.y_test(it) = y(r);
      ++it;
    } else {
      s.x_train.row(ir) = X.row(r);
      s.y_train(ir) = y(r);
      ++ir;
    }
  }
  return s;
}

std::vector<double> cv_deltas_impl(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k,
                                   std::uint64_t fold_seed, std::vector<double>* stderr_out) {
  const Eigen::Index m = X.cols();
  const auto folds = make_folds(static_cast<int>(X.rows()), k, fold_seed);
  // Per fold, the whole sparsity path is fit once on the training block;
  // every level is then scored on the held-out block.
  std::vector<std::vector<double>> sq(static_cast<std::size_t>(m),
                                      std::vector<double>(folds.size(), 0.0));
  for (std::size_t i = 0; i < folds.size(); ++i) {
    const FoldSplit s = split_fold(X, y, folds, i);
    const SparsityPath path = ssr_path(s.x_train, s.y_train);
    for (Eigen::Index q = 0; q < m; ++q) {
      const Eigen::VectorXd resid =
          s.y_test - s.x_test * path.solutions[static_cast<std::size_t>(q)].coeffs;
      sq[static_cast<std::size_t>(q)][i] = resid.squaredNorm();
    }
  }
  std::vector<double> delta(static_cast<std::size_t>(m), 0.0);
  if (stderr_out) stderr_out->assign(static_cast<std::size_t>(m), 0.0);
  for (Eigen::Index q = 0; q < m; ++q) {
    const auto& v = sq[static_cast<std::size_t>(q)];
    double mean = 0.0;
    for (double s2 : v) mean += s2;
    mean /= static_cast<double>(v.size());
    delta[static_cast<std::size_t>(q)] = std::sqrt(mean);
    if (stderr_out) {
      double var = 0.0;
      for (double s2 : v) var += (s2 - mean) * (s2 - mean);
      var /= static_cast<double>(v.size()) * static_cast<double>(v.size() - 1);
      // Delta-method propagation of the fold-mean standard error through sqrt.
      (*stderr_out)[static_cast<std::size_t>(q)] =
          delta[static_cast<std::size_t>(q)] > 0.0
              ? 0.5 * std::sqrt(var) / delta[static_cast<std::size_t>(q)]
              : 0.0;
    }
  }
  return delta;
}

}  // namespace

double cv_score(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int q, int k,
                std::uint64_t fold_seed) {
  if (q < 0 || q >= X.cols()) {
    throw config_error("cv_score: sparsity level " + std::to_string(q) +
                       " outside [0, " + std::to_string(X.cols() - 1) + "]");
  }
  return cv_deltas_impl(X, y, k, fold_seed, nullptr)[static_cast<std::size_t>(q)];
}

CvReport select_model(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k,
                      std::uint64_t fold_seed, bool one_se) {
  CvReport report;
  report.k = k;
  report.fold_seed = fold_seed;
  std::vector<double> se;
  report.delta = cv_deltas_impl(X, y, k, fold_seed, one_se ? &se : nullptr);
  const Eigen::Index m = X.cols();
  int best_q = 0;
  double best = report.delta[0];
  for (Eigen::Index q = 1; q < m; ++q) {
    // <= moves ties toward larger q, the sparser model.
    if (report.delta[static_cast<std::size_t>(q)] <= best) {
      best = report.delta[static_cast<std::size_t>(q)];
      best_q = static_cast<int>(q);
    }
  }
  if (one_se) {
    const double cutoff = best + se[static_cast<std::size_t>(best_q)];
    for (Eigen::Index q = m - 1; q >= 0; --q) {
      if (report.delta[static_cast<std::size_t>(q)] <= cutoff) {
        best_q = static_cast<int>(q);
        break;
      }
    }
  }
  report.selected_q = best_q;
  // Refit at the selected level on the full data: rebuild the path so the
  // elimination order reflects all rows, not any training subset.
  const SparsityPath path = ssr_path(X, y);
  report.selected_coeffs = path.solutions[static_cast<std::size_t>(best_q)].coeffs;
  return report;
}

ScanEntry scan_one_degree(const std::string& target, const Eigen::VectorXd& centers,
                          const Eigen::VectorXd& y, int degree, int k, std::uint64_t fold_seed,
                          bool one_se) {
  const Eigen::MatrixXd X = build_design_matrix(centers, degree);
  const CvReport report = select_model(X, y, k, fold_seed, one_se);
  ScanEntry entry;
  entry.target = target;
  entry.degree = degree;
  entry.delta = report.delta;
  entry.selected_q = report.selected_q;
  entry.selected_delta = report.delta[static_cast<std::size_t>(report.selected_q)];
  return entry;
}

std::vector<ScanEntry> dictionary_size_scan(const std::string& target,
                                            const Eigen::VectorXd& centers,
                                            const Eigen::VectorXd& y,
                                            const std::vector<int>& degrees, int k,
                                            std::uint64_t fold_seed, bool one_se) {
  std::vector<ScanEntry> entries;
  entries.reserve(degrees.size());
  for (int d : degrees) {
    entries.push_back(scan_one_degree(target, centers, y, d, k, fold_seed, one_se));
  }
  return entries;
}

}  // namespace kmpath
