#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace kmpath {

// Greedy backward-elimination path: q counts zeroed coefficients, so
// solutions[0] is the dense least-squares fit and solutions[M-1] keeps a
// single term. Active sets are nested decreasing.
struct SparsityPath {
  struct Level {
    std::vector<int> active_set;  // ascending column indices
    Eigen::VectorXd coeffs;       // length M, zero off the active set
  };
  std::vector<Level> solutions;  // indexed by q = 0 .. M-1
};

struct CvReport {
  std::vector<double> delta;  // CV score per sparsity level q
  int k = 0;
  std::uint64_t fold_seed = 0;
  int selected_q = 0;
  Eigen::VectorXd selected_coeffs;
};

// Minimum-norm least squares via a rank-revealing complete orthogonal
// decomposition. Throws numeric_error when rows < columns.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// One elimination: fit on the active columns, zero the coefficient of
// smallest magnitude (ties remove the lowest column index).
std::vector<int> ssr_step(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const std::vector<int>& active_set);

// Full path q = 0 .. M-1.
SparsityPath ssr_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Deterministic k-fold partition: rows shuffled by fold_seed, split into k
// near-equal contiguous folds (the first n%k folds one row larger).
std::vector<std::vector<int>> make_folds(int n_rows, int k, std::uint64_t fold_seed);

// CV score delta at one sparsity level: sqrt((1/k) sum_i |Y_Bi - X_Bi b_i|^2)
// with b_i the SSR path level q fit on the complement of fold i.
double cv_score(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int q, int k,
                std::uint64_t fold_seed);

// Scores every level with one fixed partition, then picks the minimum
// (ties toward larger q, the sparser model) and refits on the full data.
// one_se selects the sparsest model within one standard error of the
// minimum instead; off by default.
CvReport select_model(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k,
                      std::uint64_t fold_seed, bool one_se = false);

// The CV-score-versus-dictionary-size diagnostic behind the fit stage.
struct ScanEntry {
  std::string target;          // "drift" or "diff2"
  int degree = 0;
  std::vector<double> delta;   // per q
  int selected_q = 0;
  double selected_delta = 0.0;
};

ScanEntry scan_one_degree(const std::string& target, const Eigen::VectorXd& centers,
                          const Eigen::VectorXd& y, int degree, int k, std::uint64_t fold_seed,
                          bool one_se = false);

std::vector<ScanEntry> dictionary_size_scan(const std::string& target,
                                            const Eigen::VectorXd& centers,
                                            const Eigen::VectorXd& y,
                                            const std::vector<int>& degrees, int k,
                                            std::uint64_t fold_seed, bool one_se = false);

}  // namespace kmpath
