#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kmpath/binning.hpp"
#include "kmpath/fokker_planck.hpp"
#include "kmpath/sde_model.hpp"
#include "kmpath/simulate.hpp"
#include "kmpath/transition_path.hpp"

namespace kmpath {

struct RegressionConfig {
  int k = 10;
  std::uint64_t fold_seed = 0;
  int max_degree_drift = 5;
  int max_degree_diff = 5;
  std::vector<int> max_degree_scan = {1, 2, 3, 4, 5, 6};
  bool one_se = false;
  bool weight_by_counts = false;
};

struct PipelineConfig {
  // Absent model means the "from-data" marker: pairs come from pairs_csv
  // and the simulate stage does not apply.
  std::optional<SdeModel> model;
  std::optional<std::string> pairs_csv;
  SimulationConfig simulation;
  BinningConfig binning;
  RegressionConfig regression;
  PdeGrid pde;
  PathProblem problem;
  std::string output_dir = "out";
};

// Parses the single JSON configuration document. Unknown keys anywhere are
// a hard error. Missing seeds draw entropy defaults unless strict_repro is
// set, in which case they are a config error.
PipelineConfig parse_pipeline_config(const std::string& json_text, bool strict_repro);
PipelineConfig load_pipeline_config(const std::string& path, bool strict_repro);

// Full resolved configuration (defaults and drawn seeds made explicit).
std::string resolved_config_json(const PipelineConfig& cfg);

// Each stage reads its inputs from dir (or the configured pairs_csv),
// writes its outputs into dir, and returns the files it wrote. Running the
// five stages in order over the same dir is identical to run_pipeline.
std::vector<std::string> stage_simulate(const PipelineConfig& cfg, const std::string& dir);
std::vector<std::string> stage_estimate(const PipelineConfig& cfg, const std::string& dir);
std::vector<std::string> stage_fit(const PipelineConfig& cfg, const std::string& dir);
std::vector<std::string> stage_solve_fp(const PipelineConfig& cfg, const std::string& dir);
std::vector<std::string> stage_path(const PipelineConfig& cfg, const std::string& dir);

// All stages plus manifest.json (file hashes and the resolved config).
std::vector<std::string> run_pipeline(const PipelineConfig& cfg);

void write_manifest(const PipelineConfig& cfg, const std::string& dir,
                    const std::vector<std::string>& files);

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64_file(const std::string& path);

}  // namespace kmpath
