#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "kmpath/errors.hpp"
#include "kmpath/pipeline.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{
      "Learns drift and diffusion of a one-dimensional SDE from trajectory data "
      "and computes the maximum likelihood transition path between two states."};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  bool strict_repro = false;

  app.add_option("--config", config_path, "JSON configuration file")->required();
  app.add_option("--output-dir", output_dir, "Override the configured output directory");
  auto* seed_opt = app.add_option("--seed", seed, "Override the simulation seed");
  app.add_option("--threads", threads, "Worker-thread count hint for the simulator");
  app.add_flag("--strict-repro", strict_repro,
               "Fail unless every seed is explicit in the config");

  CLI::App* cmd_simulate =
      app.add_subcommand("simulate", "Simulate trajectories and write increment pairs");
  CLI::App* cmd_estimate =
      app.add_subcommand("estimate", "Bin increment pairs into conditional moment estimates");
  CLI::App* cmd_fit =
      app.add_subcommand("fit", "Select sparse drift and diffusion models by cross-validation");
  CLI::App* cmd_solve_fp =
      app.add_subcommand("solve-fp", "Solve the forward and backward transition-density equations");
  CLI::App* cmd_path =
      app.add_subcommand("path", "Assemble the pinned density and extract the most probable path");
  CLI::App* cmd_pipeline =
      app.add_subcommand("pipeline", "Run every stage end to end and write a manifest");
  for (CLI::App* cmd :
       {cmd_simulate, cmd_estimate, cmd_fit, cmd_solve_fp, cmd_path, cmd_pipeline}) {
    cmd->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    kmpath::PipelineConfig cfg = kmpath::load_pipeline_config(config_path, strict_repro);
    if (seed_opt->count() > 0) cfg.simulation.seed = seed;
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (threads > 0) cfg.simulation.threads = threads;
    fs::create_directories(cfg.output_dir);

    std::vector<std::string> files;
    if (cmd_pipeline->parsed()) {
      files = kmpath::run_pipeline(cfg);
    } else if (cmd_simulate->parsed()) {
      files = kmpath::stage_simulate(cfg, cfg.output_dir);
    } else if (cmd_estimate->parsed()) {
      files = kmpath::stage_estimate(cfg, cfg.output_dir);
    } else if (cmd_fit->parsed()) {
      files = kmpath::stage_fit(cfg, cfg.output_dir);
    } else if (cmd_solve_fp->parsed()) {
      files = kmpath::stage_solve_fp(cfg, cfg.output_dir);
    } else if (cmd_path->parsed()) {
      files = kmpath::stage_path(cfg, cfg.output_dir);
    }
    for (const std::string& file : files) std::cout << "wrote " << file << '\n';
    return 0;
  } catch (const kmpath::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const kmpath::numeric_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
