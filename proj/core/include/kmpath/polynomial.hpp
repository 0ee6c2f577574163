#pragma once

#include <Eigen/Dense>
#include <vector>

namespace kmpath {

// Highest monomial power accepted for a dictionary. Vandermonde systems
// degrade rapidly with degree; past 12 the conditioning is hopeless in
// double precision.
inline constexpr int kMaxDictionaryDegree = 12;

// Degree above which a conditioning caution is warranted (surfaced by
// callers that build dictionaries from user configs).
inline constexpr int kConditioningWarnDegree = 6;

// Evaluates sum_j coeffs[j] * x^j by the Horner recurrence.
// Coefficients are in ascending degree order. Throws on non-finite input.
double eval_poly(const std::vector<double>& coeffs, double x);

// First derivative's coefficient vector, again ascending. Empty input and
// constants both give {0}.
std::vector<double> poly_derivative(const std::vector<double>& coeffs);

// N x (max_degree+1) matrix with row i = [1, x_i, x_i^2, ...]. Throws
// config_error on empty samples, non-finite entries, or degree out of
// [0, kMaxDictionaryDegree].
Eigen::MatrixXd build_design_matrix(const Eigen::VectorXd& samples, int max_degree);

}  // namespace kmpath
