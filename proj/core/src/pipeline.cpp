#include "kmpath/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "kmpath/csv.hpp"
#include "kmpath/errors.hpp"
#include "kmpath/polynomial.hpp"
#include "kmpath/regression.hpp"

namespace kmpath {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Every stage error carries its stage name so a failed pipeline run points
// at the responsible step while earlier artifacts stay on disk.
template <typename Fn>
auto with_stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const config_error& e) {
    throw config_error(std::string("stage=") + name + ": " + e.what());
  } catch (const numeric_error& e) {
    throw numeric_error(std::string("stage=") + name + ": " + e.what());
  }
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) throw config_error(where + ": unknown key '" + it.key() + "'");
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw config_error(where + ": expected a number");
  return v.get<double>();
}

long as_integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw config_error(where + ": expected an integer");
  return v.get<long>();
}

std::uint64_t as_seed(const json& v, const std::string& where) {
  if (!v.is_number_unsigned()) {
    throw config_error(where + ": expected an unsigned integer seed");
  }
  return v.get<std::uint64_t>();
}

bool as_boolean(const json& v, const std::string& where) {
  if (!v.is_boolean()) throw config_error(where + ": expected a boolean");
  return v.get<bool>();
}

std::pair<double, double> as_interval(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2) {
    throw config_error(where + ": expected a [lo, hi] array");
  }
  const double lo = as_number(v[0], where + "[0]");
  const double hi = as_number(v[1], where + "[1]");
  if (!(lo < hi)) throw config_error(where + ": lo must be less than hi");
  return {lo, hi};
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

X0Sampler parse_x0_sampler(const json& v) {
  reject_unknown_keys(v, "simulation.x0_sampler", {"type", "value", "lo", "hi"});
  const json* type = find(v, "type");
  if (!type || !type->is_string()) {
    throw config_error("simulation.x0_sampler: missing string key 'type'");
  }
  X0Sampler sampler;
  const std::string kind = type->get<std::string>();
  if (kind == "fixed") {
    const json* value = find(v, "value");
    if (!value) throw config_error("simulation.x0_sampler: fixed sampler needs 'value'");
    sampler.is_uniform = false;
    sampler.value = as_number(*value, "simulation.x0_sampler.value");
  } else if (kind == "uniform") {
    const json* lo = find(v, "lo");
    const json* hi = find(v, "hi");
    if (!lo || !hi) throw config_error("simulation.x0_sampler: uniform sampler needs 'lo' and 'hi'");
    sampler.is_uniform = true;
    sampler.lo = as_number(*lo, "simulation.x0_sampler.lo");
    sampler.hi = as_number(*hi, "simulation.x0_sampler.hi");
    if (!(sampler.lo < sampler.hi)) {
      throw config_error("simulation.x0_sampler: lo must be less than hi");
    }
  } else {
    throw config_error("simulation.x0_sampler: type must be 'fixed' or 'uniform'");
  }
  return sampler;
}

void parse_simulation(const json& v, PipelineConfig& cfg, bool strict_repro) {
  reject_unknown_keys(v, "simulation",
                      {"dt", "n_steps", "n_paths", "x0_sampler", "seed", "domain_clip"});
  SimulationConfig& sim = cfg.simulation;
  if (const json* dt = find(v, "dt")) {
    sim.dt = as_number(*dt, "simulation.dt");
    if (!(sim.dt > 0.0)) throw config_error("simulation.dt: must be positive");
  }
  if (const json* n = find(v, "n_steps")) {
    sim.n_steps = as_integer(*n, "simulation.n_steps");
    if (sim.n_steps < 1) throw config_error("simulation.n_steps: must be positive");
  }
  if (const json* n = find(v, "n_paths")) {
    sim.n_paths = static_cast<int>(as_integer(*n, "simulation.n_paths"));
    if (sim.n_paths < 1) throw config_error("simulation.n_paths: must be positive");
  }
  if (const json* s = find(v, "x0_sampler")) sim.x0 = parse_x0_sampler(*s);
  if (const json* s = find(v, "seed")) {
    sim.seed = as_seed(*s, "simulation.seed");
  } else if (strict_repro) {
    throw config_error("simulation.seed: required under --strict-repro");
  } else {
    sim.seed = entropy_seed();
  }
  if (const json* c = find(v, "domain_clip")) {
    sim.domain_clip = as_interval(*c, "simulation.domain_clip");
  }
}

void parse_binning(const json& v, PipelineConfig& cfg) {
  reject_unknown_keys(v, "binning", {"n_bins", "min_count", "range"});
  if (const json* n = find(v, "n_bins")) {
    cfg.binning.n_bins = static_cast<int>(as_integer(*n, "binning.n_bins"));
    if (cfg.binning.n_bins < 1) throw config_error("binning.n_bins: must be positive");
  }
  if (const json* n = find(v, "min_count")) {
    cfg.binning.min_count = static_cast<int>(as_integer(*n, "binning.min_count"));
    if (cfg.binning.min_count < 1) throw config_error("binning.min_count: must be positive");
  }
  if (const json* r = find(v, "range")) cfg.binning.range = as_interval(*r, "binning.range");
}

void parse_regression(const json& v, PipelineConfig& cfg, bool strict_repro) {
  reject_unknown_keys(v, "regression",
                      {"k", "fold_seed", "max_degree_drift", "max_degree_diff",
                       "max_degree_scan", "one_se", "weight_by_counts"});
  RegressionConfig& reg = cfg.regression;
  if (const json* k = find(v, "k")) {
    reg.k = static_cast<int>(as_integer(*k, "regression.k"));
    if (reg.k < 2) throw config_error("regression.k: need at least 2 folds");
  }
  if (const json* s = find(v, "fold_seed")) {
    reg.fold_seed = as_seed(*s, "regression.fold_seed");
  } else if (strict_repro) {
    throw config_error("regression.fold_seed: required under --strict-repro");
  } else {
    reg.fold_seed = entropy_seed();
  }
  if (const json* d = find(v, "max_degree_drift")) {
    reg.max_degree_drift = static_cast<int>(as_integer(*d, "regression.max_degree_drift"));
  }
  if (const json* d = find(v, "max_degree_diff")) {
    reg.max_degree_diff = static_cast<int>(as_integer(*d, "regression.max_degree_diff"));
  }
  if (const json* scan = find(v, "max_degree_scan")) {
    if (!scan->is_array() || scan->empty()) {
      throw config_error("regression.max_degree_scan: expected a nonempty array");
    }
    reg.max_degree_scan.clear();
    for (std::size_t i = 0; i < scan->size(); ++i) {
      reg.max_degree_scan.push_back(static_cast<int>(
          as_integer((*scan)[i], "regression.max_degree_scan[" + std::to_string(i) + "]")));
    }
  }
  for (int d : reg.max_degree_scan) {
    if (d < 0 || d > kMaxDictionaryDegree) {
      throw config_error("regression.max_degree_scan: degree out of range");
    }
  }
  if (reg.max_degree_drift < 0 || reg.max_degree_drift > kMaxDictionaryDegree ||
      reg.max_degree_diff < 0 || reg.max_degree_diff > kMaxDictionaryDegree) {
    throw config_error("regression: max degree out of range");
  }
  if (const json* o = find(v, "one_se")) reg.one_se = as_boolean(*o, "regression.one_se");
  if (const json* w = find(v, "weight_by_counts")) {
    reg.weight_by_counts = as_boolean(*w, "regression.weight_by_counts");
  }
}

void parse_pde(const json& v, PipelineConfig& cfg, bool* n_t_given) {
  reject_unknown_keys(v, "pde", {"x_lo", "x_hi", "n_x", "n_t"});
  if (const json* x = find(v, "x_lo")) cfg.pde.x_lo = as_number(*x, "pde.x_lo");
  if (const json* x = find(v, "x_hi")) cfg.pde.x_hi = as_number(*x, "pde.x_hi");
  if (const json* n = find(v, "n_x")) {
    cfg.pde.n_x = static_cast<int>(as_integer(*n, "pde.n_x"));
  }
  if (const json* n = find(v, "n_t")) {
    cfg.pde.n_t = static_cast<int>(as_integer(*n, "pde.n_t"));
    *n_t_given = true;
  }
}

void parse_problem(const json& v, PipelineConfig& cfg) {
  reject_unknown_keys(v, "problem", {"x0", "xf", "tf"});
  const json* x0 = find(v, "x0");
  const json* xf = find(v, "xf");
  const json* tf = find(v, "tf");
  if (!x0 || !xf || !tf) throw config_error("problem: x0, xf and tf are all required");
  cfg.problem.x0 = as_number(*x0, "problem.x0");
  cfg.problem.xf = as_number(*xf, "problem.xf");
  cfg.problem.tf = as_number(*tf, "problem.tf");
  if (!(cfg.problem.tf > 0.0)) throw config_error("problem.tf: must be positive");
}

json sampler_to_json(const X0Sampler& s) {
  json v;
  if (s.is_uniform) {
    v["type"] = "uniform";
    v["lo"] = s.lo;
    v["hi"] = s.hi;
  } else {
    v["type"] = "fixed";
    v["value"] = s.value;
  }
  return v;
}

json simulation_to_json(const SimulationConfig& sim) {
  json v;
  v["dt"] = sim.dt;
  v["n_steps"] = sim.n_steps;
  v["n_paths"] = sim.n_paths;
  v["x0_sampler"] = sampler_to_json(sim.x0);
  v["seed"] = sim.seed;
  if (sim.domain_clip) v["domain_clip"] = {sim.domain_clip->first, sim.domain_clip->second};
  return v;
}

json config_to_json(const PipelineConfig& cfg) {
  json v;
  if (cfg.model) {
    v["model"] = json::parse(model_to_json_text(*cfg.model));
  } else {
    v["model"] = "from-data";
  }
  if (cfg.pairs_csv) v["pairs_csv"] = *cfg.pairs_csv;
  v["simulation"] = simulation_to_json(cfg.simulation);
  json binning;
  binning["n_bins"] = cfg.binning.n_bins;
  binning["min_count"] = cfg.binning.min_count;
  if (cfg.binning.range) binning["range"] = {cfg.binning.range->first, cfg.binning.range->second};
  v["binning"] = binning;
  json regression;
  regression["k"] = cfg.regression.k;
  regression["fold_seed"] = cfg.regression.fold_seed;
  regression["max_degree_drift"] = cfg.regression.max_degree_drift;
  regression["max_degree_diff"] = cfg.regression.max_degree_diff;
  regression["max_degree_scan"] = cfg.regression.max_degree_scan;
  regression["one_se"] = cfg.regression.one_se;
  regression["weight_by_counts"] = cfg.regression.weight_by_counts;
  v["regression"] = regression;
  json pde;
  pde["x_lo"] = cfg.pde.x_lo;
  pde["x_hi"] = cfg.pde.x_hi;
  pde["n_x"] = cfg.pde.n_x;
  pde["n_t"] = cfg.pde.n_t;
  v["pde"] = pde;
  json problem;
  problem["x0"] = cfg.problem.x0;
  problem["xf"] = cfg.problem.xf;
  problem["tf"] = cfg.problem.tf;
  v["problem"] = problem;
  v["output_dir"] = cfg.output_dir;
  return v;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open " + path + " for writing");
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) throw config_error("write failed for " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open " + path + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& json_text, bool strict_repro) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw config_error("config: top level must be a JSON object");
  reject_unknown_keys(root, "config",
                      {"model", "pairs_csv", "simulation", "binning", "regression", "pde",
                       "problem", "output_dir"});

  PipelineConfig cfg;
  const json* model = find(root, "model");
  if (!model) throw config_error("config: 'model' is required ('from-data' or an SdeModel object)");
  if (model->is_string()) {
    if (model->get<std::string>() != "from-data") {
      throw config_error("config: model string must be 'from-data'");
    }
    const json* pairs = find(root, "pairs_csv");
    if (!pairs || !pairs->is_string()) {
      throw config_error("config: 'from-data' model requires a 'pairs_csv' path");
    }
    cfg.pairs_csv = pairs->get<std::string>();
  } else if (model->is_object()) {
    if (find(root, "pairs_csv")) {
      throw config_error("config: 'pairs_csv' is only valid with the 'from-data' model");
    }
    cfg.model = model_from_json_text(model->dump());
  } else {
    throw config_error("config: 'model' must be an object or the string 'from-data'");
  }

  if (const json* sim = find(root, "simulation")) {
    parse_simulation(*sim, cfg, strict_repro);
  } else if (strict_repro) {
    throw config_error("simulation.seed: required under --strict-repro");
  } else {
    cfg.simulation.seed = entropy_seed();
  }
  if (const json* binning = find(root, "binning")) parse_binning(*binning, cfg);
  if (const json* reg = find(root, "regression")) {
    parse_regression(*reg, cfg, strict_repro);
  } else if (strict_repro) {
    throw config_error("regression.fold_seed: required under --strict-repro");
  } else {
    cfg.regression.fold_seed = entropy_seed();
  }
  bool n_t_given = false;
  if (const json* pde = find(root, "pde")) parse_pde(*pde, cfg, &n_t_given);
  const json* problem = find(root, "problem");
  if (!problem) throw config_error("config: 'problem' is required");
  parse_problem(*problem, cfg);
  if (const json* out = find(root, "output_dir")) {
    if (!out->is_string()) throw config_error("config: output_dir must be a string");
    cfg.output_dir = out->get<std::string>();
  }

  cfg.pde.t_f = cfg.problem.tf;
  if (!n_t_given) {
    // Default time resolution: the largest step with dt <= dx.
    cfg.pde.n_t = static_cast<int>(std::ceil(cfg.pde.t_f / cfg.pde.dx() - 1e-12));
    cfg.pde.n_t = std::max(cfg.pde.n_t, 1);
  }
  cfg.pde.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path, bool strict_repro) {
  return parse_pipeline_config(read_text(path), strict_repro);
}

std::string resolved_config_json(const PipelineConfig& cfg) {
  return config_to_json(cfg).dump(2);
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open " + path + " for hashing");
  std::uint64_t hash = 0xcbf29ce484222325ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ull;
    }
  }
  return hash;
}

std::vector<std::string> stage_simulate(const PipelineConfig& cfg, const std::string& dir) {
  return with_stage("simulate", [&]() -> std::vector<std::string> {
    if (!cfg.model) {
      throw config_error("model is 'from-data'; there is nothing to simulate");
    }
    const TrajectorySet traj = simulate_em(*cfg.model, cfg.simulation);
    const IncrementPairs pairs = extract_pairs(traj);
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(pairs.x.size()));
    for (Eigen::Index i = 0; i < pairs.x.size(); ++i) {
      rows[static_cast<std::size_t>(i)] = {pairs.x(i), pairs.dx(i), pairs.delta_t};
    }
    const std::string pairs_path = join_path(dir, "pairs.csv");
    write_csv(pairs_path, "x,dx,delta_t", rows);
    json sidecar;
    sidecar["model"] = json::parse(model_to_json_text(*cfg.model));
    sidecar["simulation"] = simulation_to_json(cfg.simulation);
    const std::string sidecar_path = join_path(dir, "pairs_config.json");
    write_text(sidecar_path, sidecar.dump(2));
    return {pairs_path, sidecar_path};
  });
}

namespace {

IncrementPairs read_pairs_csv(const std::string& path) {
  const CsvTable table = read_csv(path, true);
  if (table.header != "x,dx,delta_t") {
    throw config_error(path + ": expected header 'x,dx,delta_t'");
  }
  if (table.rows.empty()) throw config_error(path + ": no increment pairs");
  IncrementPairs pairs;
  pairs.x.resize(static_cast<Eigen::Index>(table.rows.size()));
  pairs.dx.resize(static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.size() != 3) {
      throw config_error(path + ": row " + std::to_string(i + 2) + " needs 3 columns");
    }
    pairs.x(static_cast<Eigen::Index>(i)) = row[0];
    pairs.dx(static_cast<Eigen::Index>(i)) = row[1];
    if (i == 0) {
      pairs.delta_t = row[2];
    } else if (row[2] != pairs.delta_t) {
      throw config_error(path + ": delta_t varies between rows");
    }
  }
  if (!(pairs.delta_t > 0.0)) throw config_error(path + ": delta_t must be positive");
  return pairs;
}

std::string pairs_input_path(const PipelineConfig& cfg, const std::string& dir) {
  return cfg.pairs_csv ? *cfg.pairs_csv : join_path(dir, "pairs.csv");
}

BinnedMoments read_bins_csv(const std::string& path) {
  const CsvTable table = read_csv(path, true);
  if (table.header != "center,count,y1,y2") {
    throw config_error(path + ": expected header 'center,count,y1,y2'");
  }
  if (table.rows.empty()) throw config_error(path + ": no bins");
  BinnedMoments bins;
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  bins.centers.resize(n);
  bins.y1.resize(n);
  bins.y2.resize(n);
  bins.counts.resize(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.size() != 4) {
      throw config_error(path + ": row " + std::to_string(i + 2) + " needs 4 columns");
    }
    bins.centers(static_cast<Eigen::Index>(i)) = row[0];
    bins.counts[i] = static_cast<long>(row[1]);
    bins.y1(static_cast<Eigen::Index>(i)) = row[2];
    bins.y2(static_cast<Eigen::Index>(i)) = row[3];
  }
  return bins;
}

}  // namespace

std::vector<std::string> stage_estimate(const PipelineConfig& cfg, const std::string& dir) {
  return with_stage("estimate", [&]() -> std::vector<std::string> {
    const IncrementPairs pairs = read_pairs_csv(pairs_input_path(cfg, dir));
    const BinnedMoments bins = bin_moments(pairs, cfg.binning);
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(bins.centers.size()));
    for (Eigen::Index j = 0; j < bins.centers.size(); ++j) {
      rows[static_cast<std::size_t>(j)] = {bins.centers(j),
                                           static_cast<double>(bins.counts[static_cast<std::size_t>(j)]),
                                           bins.y1(j), bins.y2(j)};
    }
    const std::string bins_path = join_path(dir, "bins.csv");
    write_csv(bins_path, "center,count,y1,y2", rows);
    return {bins_path};
  });
}

std::vector<std::string> stage_fit(const PipelineConfig& cfg, const std::string& dir) {
  return with_stage("fit", [&]() -> std::vector<std::string> {
    const BinnedMoments bins = read_bins_csv(join_path(dir, "bins.csv"));
    Eigen::VectorXd centers = bins.centers;
    Eigen::VectorXd y1 = bins.y1;
    Eigen::VectorXd y2 = bins.y2;
    Eigen::VectorXd row_scale = Eigen::VectorXd::Ones(centers.size());
    if (cfg.regression.weight_by_counts) {
      // Weighted least squares via row scaling by sqrt(count).
      for (Eigen::Index j = 0; j < centers.size(); ++j) {
        row_scale(j) = std::sqrt(static_cast<double>(bins.counts[static_cast<std::size_t>(j)]));
      }
    }
    const RegressionConfig& reg = cfg.regression;

    std::ostringstream scan_csv;
    scan_csv << "target,degree,q,delta\n";
    auto run_scan = [&](const std::string& target, const Eigen::VectorXd& y) {
      for (int degree : reg.max_degree_scan) {
        Eigen::MatrixXd X = build_design_matrix(centers, degree);
        Eigen::VectorXd yy = y;
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
          X.row(r) *= row_scale(r);
          yy(r) *= row_scale(r);
        }
        const CvReport report = select_model(X, yy, reg.k, reg.fold_seed, reg.one_se);
        for (std::size_t q = 0; q < report.delta.size(); ++q) {
          scan_csv << target << ',' << degree << ',' << q << ','
                   << format_double(report.delta[q]) << '\n';
        }
      }
    };
    run_scan("drift", y1);
    run_scan("diff2", y2);

    auto fit_target = [&](const Eigen::VectorXd& y, int degree) {
      Eigen::MatrixXd X = build_design_matrix(centers, degree);
      Eigen::VectorXd yy = y;
      for (Eigen::Index r = 0; r < X.rows(); ++r) {
        X.row(r) *= row_scale(r);
        yy(r) *= row_scale(r);
      }
      return select_model(X, yy, reg.k, reg.fold_seed, reg.one_se);
    };
    const CvReport drift_report = fit_target(y1, reg.max_degree_drift);
    const CvReport diff_report = fit_target(y2, reg.max_degree_diff);

    auto to_coeffs = [](const Eigen::VectorXd& b) {
      std::vector<double> coeffs(b.data(), b.data() + b.size());
      while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
      return coeffs;
    };
    const SdeModel learned =
        make_model(to_coeffs(drift_report.selected_coeffs), to_coeffs(diff_report.selected_coeffs));

    const std::string model_path = join_path(dir, "model.json");
    save_model(learned, model_path);
    const std::string scan_path = join_path(dir, "cv_scan.csv");
    write_text(scan_path, scan_csv.str());
    return {model_path, scan_path};
  });
}

namespace {

std::vector<std::vector<double>> field_to_rows(const DensityField& field) {
  const PdeGrid& grid = field.grid;
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(grid.n_t) + 2);
  std::vector<double> xrow(static_cast<std::size_t>(grid.n_x));
  for (int j = 0; j < grid.n_x; ++j) xrow[static_cast<std::size_t>(j)] = grid.node(j);
  rows.push_back(std::move(xrow));
  for (int m = 0; m <= grid.n_t; ++m) {
    std::vector<double> row(static_cast<std::size_t>(grid.n_x) + 1);
    row[0] = (m == grid.n_t) ? grid.t_f : m * grid.dt();
    for (int j = 0; j < grid.n_x; ++j) row[static_cast<std::size_t>(j) + 1] = field.values(m, j);
    rows.push_back(std::move(row));
  }
  return rows;
}

DensityField read_field_csv(const std::string& path, const PdeGrid& grid, FieldKind kind) {
  const CsvTable table = read_csv(path, false);
  if (table.rows.size() != static_cast<std::size_t>(grid.n_t) + 2) {
    throw config_error(path + ": expected " + std::to_string(grid.n_t + 2) +
                       " rows for the configured grid");
  }
  if (table.rows[0].size() != static_cast<std::size_t>(grid.n_x)) {
    throw config_error(path + ": x-grid row does not match the configured n_x");
  }
  for (int j = 0; j < grid.n_x; ++j) {
    if (std::abs(table.rows[0][static_cast<std::size_t>(j)] - grid.node(j)) > 1e-12) {
      throw config_error(path + ": x-grid does not match the configured pde domain");
    }
  }
  DensityField field;
  field.grid = grid;
  field.kind = kind;
  field.values.resize(grid.n_t + 1, grid.n_x);
  for (int m = 0; m <= grid.n_t; ++m) {
    const auto& row = table.rows[static_cast<std::size_t>(m) + 1];
    if (row.size() != static_cast<std::size_t>(grid.n_x) + 1) {
      throw config_error(path + ": level row " + std::to_string(m) + " has wrong width");
    }
    for (int j = 0; j < grid.n_x; ++j) field.values(m, j) = row[static_cast<std::size_t>(j) + 1];
  }
  return field;
}

json solve_diag_to_json(const SolveDiagnostics& diag) {
  json v;
  v["clamped_faces"] = diag.clamped_faces;
  if (diag.clamped_faces > 0) v["clamp_region"] = {diag.clamp_lo, diag.clamp_hi};
  v["advection_number"] = diag.advection_number;
  v["advection_warning"] = diag.advection_warning;
  v["max_mass_error"] = diag.max_mass_error;
  v["min_value"] = diag.min_value;
  return v;
}

}  // namespace

std::vector<std::string> stage_solve_fp(const PipelineConfig& cfg, const std::string& dir) {
  return with_stage("solve-fp", [&]() -> std::vector<std::string> {
    const SdeModel learned = load_model(join_path(dir, "model.json"));
    SolveDiagnostics fwd_diag, bwd_diag;
    const DensityField forward = solve_forward(learned, cfg.problem.x0, cfg.pde, &fwd_diag);
    const DensityField backward = solve_backward(learned, cfg.problem.xf, cfg.pde, &bwd_diag);
    const std::string forward_path = join_path(dir, "forward.csv");
    const std::string backward_path = join_path(dir, "backward.csv");
    write_csv(forward_path, "", field_to_rows(forward));
    write_csv(backward_path, "", field_to_rows(backward));
    if (fwd_diag.advection_warning) {
      std::fprintf(stderr, "warning: advection resolution dt*max|f|/dx = %g exceeds %g\n",
                   fwd_diag.advection_number, kAdvectionWarnThreshold);
    }
    json diagnostics;
    diagnostics["forward"] = solve_diag_to_json(fwd_diag);
    diagnostics["backward"] = solve_diag_to_json(bwd_diag);
    const std::string diag_path = join_path(dir, "solve_fp_diagnostics.json");
    write_text(diag_path, diagnostics.dump(2));
    return {forward_path, backward_path, diag_path};
  });
}

std::vector<std::string> stage_path(const PipelineConfig& cfg, const std::string& dir) {
  return with_stage("path", [&]() -> std::vector<std::string> {
    const DensityField forward =
        read_field_csv(join_path(dir, "forward.csv"), cfg.pde, FieldKind::kForward);
    const DensityField backward =
        read_field_csv(join_path(dir, "backward.csv"), cfg.pde, FieldKind::kBackward);
    const ConditionalDensity pa = conditional_density(forward, backward, cfg.problem);
    const TransitionPath path = most_probable_path(pa);
    std::vector<std::vector<double>> rows(path.t.size());
    for (std::size_t m = 0; m < path.t.size(); ++m) {
      rows[m] = {path.t[m], path.x_m[m], path.peak_density[m]};
    }
    const std::string path_csv = join_path(dir, "path.csv");
    write_csv(path_csv, "t,x_m,peak_density", rows);
    json diagnostics;
    diagnostics["normalizer"] = pa.normalizer;
    diagnostics["interior_mass"] = {pa.interior_mass_lo, pa.interior_mass_hi};
    diagnostics["tie_levels"] = pa.tie_levels;
    const std::string diag_path = join_path(dir, "path_diagnostics.json");
    write_text(diag_path, diagnostics.dump(2));
    return {path_csv, diag_path};
  });
}

void write_manifest(const PipelineConfig& cfg, const std::string& dir,
                    const std::vector<std::string>& files) {
  json manifest;
  json hashes = json::object();
  for (const std::string& file : files) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(file)));
    hashes[fs::path(file).filename().string()] = buf;
  }
  manifest["files"] = hashes;
  manifest["config"] = config_to_json(cfg);
  write_text(join_path(dir, "manifest.json"), manifest.dump(2));
}

std::vector<std::string> run_pipeline(const PipelineConfig& cfg) {
  const std::string& dir = cfg.output_dir;
  fs::create_directories(dir);
  std::vector<std::string> files;
  auto append = [&files](std::vector<std::string> stage_files) {
    files.insert(files.end(), stage_files.begin(), stage_files.end());
  };
  if (cfg.model) append(stage_simulate(cfg, dir));
  append(stage_estimate(cfg, dir));
  append(stage_fit(cfg, dir));
  append(stage_solve_fp(cfg, dir));
  append(stage_path(cfg, dir));
  write_manifest(cfg, dir, files);
  files.push_back(join_path(dir, "manifest.json"));
  return files;
}

}  // namespace kmpath
