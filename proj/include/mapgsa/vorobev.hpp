#pragma once

#include "mapgsa/model.hpp"
#include "mapgsa/resample.hpp"
#include "mapgsa/setgrid.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mapgsa {

/// Empirical conditional Vorob'ev median given U_i = ui: n_inner draws of the
/// other inputs from the stream `seed`, thresholded coverage at 0.5.
SetSample conditional_median(const MapModel& model, const LevelGrid& levels, std::size_t i, double ui,
                             std::size_t n_inner, std::uint64_t seed);

/// Vorob'ev median-deviation index of one input, double-loop estimate.
struct VorobevEstimate {
  std::string input;
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool has_ci = false;
  std::size_t n_outer = 0;
  std::size_t n_inner = 0;
  /// Mean volume of outer sets Delta unconditional median (VMD estimate).
  double vmd = 0.0;
  /// Mean volume of outer sets Delta their conditional median.
  double conditional_deviation = 0.0;
  std::size_t evaluations = 0;
  std::size_t B = 0;
  std::uint64_t seed = 0;
};

/// 1 - sum_j vol(G_j Delta Q_i(U_i^j)) / sum_j vol(G_j Delta Q), where G_j is
/// the first inner set of outer draw j and Q is the median of the pooled outer
/// sets. Uses exactly n_outer * n_inner evaluations. Each outer draw j uses
/// the streams (seed, i, j), so results do not depend on scheduling.
/// Throws DegenerateError when the denominator is zero (deterministic output).
VorobevEstimate vorobev_index(const MapModel& model, const LevelGrid& levels, std::size_t i, std::size_t n_outer,
                              std::size_t n_inner, std::uint64_t seed,
                              const std::optional<BootstrapSpec>& bootstrap = std::nullopt);

}  // namespace mapgsa
