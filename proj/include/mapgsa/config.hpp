#pragma once

#include "mapgsa/hsic.hpp"
#include "mapgsa/model.hpp"
#include "mapgsa/resample.hpp"
#include "mapgsa/sampling.hpp"
#include "mapgsa/universal.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mapgsa {

struct InputConfig {
  InputDim dim;
  /// Frozen inputs are held at this value and excluded from every analysis.
  std::optional<double> fixed;
};

struct ModelConfig {
  ModelKind kind = ModelKind::synthetic_separable;
  SeparableParams separable;
  PlumeParams plume;
  /// external-table only; relative paths resolve against the config file.
  std::string path;
};

struct GridConfig {
  DomainGrid domain{0.0, 1.0, 0.0, 1.0, 64, 64};
  std::size_t nc = 32;
  /// Level range; unset means a pilot-sample range (see auto_levels).
  std::optional<std::pair<double, double>> c_bounds;
  std::uint64_t pilot_seed = 0;
};

enum class Method { sobol_maps, generalized_sobol, vorobev, universal, hsic };

std::string to_string(Method method);
Method parse_method(const std::string& name);

struct AnalysisConfig {
  Method method = Method::generalized_sobol;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  /// Inputs to analyse by name; empty means every free input.
  std::vector<std::string> targets;
  /// Run the bootstrap for this analysis when a top-level bootstrap exists.
  bool bootstrap = true;

  DesignGenerator generator = DesignGenerator::halton;  // sobol-maps, generalized-sobol
  std::size_t n_outer = 32;                              // vorobev
  std::size_t n_inner = 32;
  FamilyKind family = FamilyKind::centered_balls;        // universal
  std::size_t n_a = 100;
  int axis = 3;
  std::optional<DistributionSpec> law;
  KernelKind kernel = KernelKind::sobolev1;              // hsic
  double bandwidth = 0.2;
  std::optional<double> sigma2;
  PValueMethod pvalue = PValueMethod::gamma;
  std::size_t b_perm = 200;
};

struct RunConfig {
  std::vector<InputConfig> inputs;
  ModelConfig model;
  GridConfig grid;
  std::vector<AnalysisConfig> analyses;
  std::optional<BootstrapSpec> bootstrap;
  std::string output_dir = "out";
  /// Directory of the config file, for resolving relative paths.
  std::string base_dir = ".";
  /// 1-based source line of each dotted key, e.g. "analyses[0].n".
  std::map<std::string, int> lines;

  int line_of(const std::string& key) const;
};

/// Parses the YAML text of a run configuration. Structural problems (bad YAML,
/// unknown keys, wrong types, unknown names) throw ConfigError; numeric sanity
/// is left to validate().
RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

struct ConfigIssue {
  std::string key;
  int line = 0;
  std::string message;
};

struct ValidationReport {
  std::vector<ConfigIssue> issues;
  /// Estimated peak bytes for set storage in the largest analysis.
  std::size_t memory_bytes = 0;
  std::size_t planned_evaluations = 0;

  bool ok() const noexcept { return issues.empty(); }
  std::string format() const;
};

/// Dry run: budgets, grid size, distribution parameters and input references.
/// No model is evaluated.
ValidationReport validate(const RunConfig& config);

/// Parses then validates; parse failures become report entries.
ValidationReport validate_file(const std::string& path);

}  // namespace mapgsa
