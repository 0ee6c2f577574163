#include "kmpath/sde_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kmpath/errors.hpp"
#include "kmpath/polynomial.hpp"

namespace kmpath {

using nlohmann::json;

double SdeModel::f(double x) const { return eval_poly(drift, x); }
double SdeModel::sigma2(double x) const { return eval_poly(diff2, x); }
double SdeModel::sigma2_prime(double x) const { return eval_poly(poly_derivative(diff2), x); }

SdeModel make_model(std::vector<double> drift, std::vector<double> diff2) {
  if (drift.empty() || diff2.empty())
    throw config_error("model: drift and diff2 coefficient vectors must be nonempty");
  const int deg_f = static_cast<int>(drift.size()) - 1;
  const int deg_s = static_cast<int>(diff2.size()) - 1;
  if (deg_f > kMaxDictionaryDegree || deg_s > kMaxDictionaryDegree)
    throw config_error("model: polynomial degree exceeds " + std::to_string(kMaxDictionaryDegree));
  for (double c : drift)
    if (!std::isfinite(c)) throw config_error("model: non-finite drift coefficient");
  for (double c : diff2)
    if (!std::isfinite(c)) throw config_error("model: non-finite diff2 coefficient");
  SdeModel m;
  m.drift = std::move(drift);
  m.diff2 = std::move(diff2);
  m.max_degree_drift = deg_f;
  m.max_degree_diff = deg_s;
  return m;
}

void validate_diff2_nonnegative(const SdeModel& model, double x_lo, double x_hi, int n_samples) {
  if (!(x_lo < x_hi)) throw config_error("validate_diff2: empty domain");
  const int n = n_samples < 2 ? 2 : n_samples;
  for (int i = 0; i < n; ++i) {
    const double x = x_lo + (x_hi - x_lo) * i / (n - 1);
    const double s2 = model.sigma2(x);
    if (s2 < 0.0) {
      std::ostringstream os;
      os << "sigma^2(" << x << ") = " << s2 << " is negative on the working domain";
      throw numeric_error(os.str());
    }
  }
}

namespace {

std::vector<double> coeff_array(const json& j, const std::string& key) {
  if (!j.at(key).is_array()) throw config_error("model json: \"" + key + "\" must be an array");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) throw config_error("model json: \"" + key + "\" holds a non-number");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

SdeModel model_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("model json: parse failure: ") + e.what());
  }
  if (!j.is_object()) throw config_error("model json: top level must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "drift" && key != "diff2" && key != "max_degree_drift" && key != "max_degree_diff")
      throw config_error("model json: unknown key \"" + key + "\"");
  }
  if (!j.contains("drift") || !j.contains("diff2"))
    throw config_error("model json: \"drift\" and \"diff2\" are required");
  SdeModel m = make_model(coeff_array(j, "drift"), coeff_array(j, "diff2"));
  if (j.contains("max_degree_drift")) {
    const int d = j.at("max_degree_drift").get<int>();
    if (d != m.max_degree_drift)
      throw config_error("model json: max_degree_drift does not match drift length");
  }
  if (j.contains("max_degree_diff")) {
    const int d = j.at("max_degree_diff").get<int>();
    if (d != m.max_degree_diff)
      throw config_error("model json: max_degree_diff does not match diff2 length");
  }
  return m;
}

std::string model_to_json_text(const SdeModel& model) {
  json j;
  j["drift"] = model.drift;
  j["diff2"] = model.diff2;
  j["max_degree_drift"] = model.max_degree_drift;
  j["max_degree_diff"] = model.max_degree_diff;
  return j.dump(2) + "\n";
}

SdeModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open model file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json_text(ss.str());
}

void save_model(const SdeModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot write model file: " + path);
  out << model_to_json_text(model);
}

}  // namespace kmpath
