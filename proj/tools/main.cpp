#include "mapgsa/config.hpp"
#include "mapgsa/errors.hpp"
#include "mapgsa/parallel.hpp"
#include "mapgsa/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Sensitivity analysis for models with 2D map outputs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::size_t threads = 0;
  bool quiet = false;

  auto* run_cmd = app.add_subcommand("run", "Run every analysis of a config and write its outputs");
  run_cmd->add_option("config", config_path, "YAML run configuration")->required();
  run_cmd->add_option("-o,--output", output_dir, "Override output.dir");
  run_cmd->add_option("-j,--threads", threads, "Worker threads (default: all cores)");
  run_cmd->add_flag("-q,--quiet", quiet, "No progress lines");

  auto* validate_cmd = app.add_subcommand("validate", "Check a config without evaluating the model");
  validate_cmd->add_option("config", config_path, "YAML run configuration")->required();

  CLI11_PARSE(app, argc, argv);

  if (*validate_cmd) {
    const auto report = mapgsa::validate_file(config_path);
    std::cout << report.format();
    return report.ok() ? mapgsa::exit_ok : mapgsa::exit_config;
  }

  try {
    auto config = mapgsa::load_config(config_path);
    if (!output_dir.empty()) config.output_dir = output_dir;
    if (threads > 0) mapgsa::set_num_threads(threads);
    const auto result = mapgsa::run(config, quiet ? nullptr : &std::cerr);
    return result.exit_code;
  } catch (const mapgsa::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return mapgsa::exit_config;
  } catch (const mapgsa::DegenerateError& e) {
    std::cerr << "degenerate: " << e.what() << "\n";
    return mapgsa::exit_degenerate;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return mapgsa::exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mapgsa::exit_internal;
  }
}
