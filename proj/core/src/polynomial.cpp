#include "kmpath/polynomial.hpp"

#include <cmath>
#include <string>

#include "kmpath/errors.hpp"

namespace kmpath {

double eval_poly(const std::vector<double>& coeffs, double x) {
  if (coeffs.empty()) throw config_error("eval_poly: empty coefficient vector");
  if (!std::isfinite(x)) throw config_error("eval_poly: non-finite argument");
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

std::vector<double> poly_derivative(const std::vector<double>& coeffs) {
  if (coeffs.size() <= 1) return {0.0};
  std::vector<double> d(coeffs.size() - 1);
  for (std::size_t j = 1; j < coeffs.size(); ++j) d[j - 1] = static_cast<double>(j) * coeffs[j];
  return d;
}

Eigen::MatrixXd build_design_matrix(const Eigen::VectorXd& samples, int max_degree) {
  if (samples.size() == 0) throw config_error("build_design_matrix: empty samples");
  if (max_degree < 0 || max_degree > kMaxDictionaryDegree)
    throw config_error("build_design_matrix: degree " + std::to_string(max_degree) +
                       " outside [0, " + std::to_string(kMaxDictionaryDegree) + "]");
  for (Eigen::Index i = 0; i < samples.size(); ++i)
    if (!std::isfinite(samples[i]))
      throw config_error("build_design_matrix: non-finite sample at row " + std::to_string(i));

  Eigen::MatrixXd X(samples.size(), max_degree + 1);
  X.col(0).setOnes();
  for (int j = 1; j <= max_degree; ++j) X.col(j) = X.col(j - 1).cwiseProduct(samples);
  return X;
}

}  // namespace kmpath
