#pragma once

#include "mapgsa/config.hpp"
#include "mapgsa/model.hpp"
#include "mapgsa/resample.hpp"

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace mapgsa {

enum ExitCode : int { exit_ok = 0, exit_internal = 1, exit_config = 2, exit_degenerate = 3 };

struct AnalysisOutcome {
  std::string method;
  /// "ok", "degenerate" or "error".
  std::string status = "ok";
  std::string message;
  std::size_t evaluations = 0;
  std::vector<IndexEstimate> indices;
};

struct RunResult {
  int exit_code = exit_ok;
  LevelGrid levels;
  std::vector<AnalysisOutcome> analyses;
};

/// Model described by the config, wrapped in a FrozenModel when inputs are fixed.
ModelPtr build_model(const RunConfig& config);

/// Configured level range, or the pilot-sample range when c_bounds is unset.
LevelGrid build_levels(const RunConfig& config, const MapModel& model);

/// Runs every analysis in order and writes indices.csv, pvalues.csv (hsic),
/// summary.json and maps/ under config.output_dir. A failing analysis is
/// recorded and the rest still run; the exit code reflects the worst failure.
RunResult run(const RunConfig& config, std::ostream* log = nullptr);

/// Round-trip text for a double ("%.17g").
std::string format_number(double v);

}  // namespace mapgsa
