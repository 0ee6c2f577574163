#pragma once

#include <string>
#include <vector>

namespace kmpath {

// dX_t = f(X_t) dt + sigma(X_t) dW_t with f and sigma^2 represented as
// coefficient vectors over the monomial dictionary {1, x, x^2, ...},
// ascending degree order.
struct SdeModel {
  std::vector<double> drift;  // f(x)
  std::vector<double> diff2;  // sigma^2(x)
  int max_degree_drift = 0;
  int max_degree_diff = 0;

  double f(double x) const;
  double sigma2(double x) const;
  // d(sigma^2)/dx, needed by the flux form of the forward equation.
  double sigma2_prime(double x) const;
};

// Builds a model from coefficient vectors; degrees are inferred from the
// vector lengths. Throws config_error on empty vectors or excessive degree.
SdeModel make_model(std::vector<double> drift, std::vector<double> diff2);

// sigma^2 must be nonnegative where the model is evaluated. Checked on a
// uniform sampling of [x_lo, x_hi] (the declared working domain), not
// symbolically: learned diffusions may dip negative outside the data range.
// Throws numeric_error naming the first offending location.
void validate_diff2_nonnegative(const SdeModel& model, double x_lo, double x_hi,
                                int n_samples = 2001);

// JSON object {"drift": [...], "diff2": [...], "max_degree_drift": n,
// "max_degree_diff": n}. Unknown keys are a hard error.
SdeModel model_from_json_text(const std::string& text);
std::string model_to_json_text(const SdeModel& model);
SdeModel load_model(const std::string& path);
void save_model(const SdeModel& model, const std::string& path);

}  // namespace kmpath
