#pragma once

#include "mapgsa/model.hpp"
#include "mapgsa/resample.hpp"
#include "mapgsa/sampling.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace mapgsa {

/// Pointwise first-order Sobol' maps estimated by pick-and-freeze.
struct SobolMapResult {
  DomainGrid grid;
  std::size_t n = 0;
  std::vector<std::string> inputs;
  /// index_maps[i][cell], row-major over the domain grid.
  std::vector<std::vector<double>> index_maps;
  /// Unbiased sample variance of Phi_U per cell.
  std::vector<double> variance;
  /// 1 where the variance is negligible; such cells report index 0, weight 0.
  std::vector<std::uint8_t> degenerate;
  std::size_t degenerate_cells = 0;
  std::size_t evaluations = 0;

  // Kept only when requested, for resampling the generalized indices.
  /// Per sample j and input i: sum over cells of Phi_U'(Phi_Ui~ - Phi_U).
  Matrix contributions;
  /// Phi_U minus its mean over the non-degenerate cells, one row per sample.
  Matrix centered;
};

/// Numerator per cell: (1/N) sum_j Phi_U'(x) (Phi_Ui~(x) - Phi_U(x));
/// denominator: unbiased variance of Phi_U(x). Consumes n (p + 2) evaluations.
/// Throws DegenerateError when every cell has zero variance.
SobolMapResult sobol_maps(const MapModel& model, const PickFreezeDesign& design, bool keep_samples = false);

/// sum_x w_x S_i(x) with w_x = Var(x) / sum_x' Var(x'); degenerate cells have weight 0.
double generalized_index(const SobolMapResult& result, std::size_t i);

/// Generalized indices for all inputs, with percentile bootstrap intervals
/// over the pick-and-freeze rows when `bootstrap` is given.
std::vector<IndexEstimate> generalized_sobol(const MapModel& model, const PickFreezeDesign& design,
                                             const std::optional<BootstrapSpec>& bootstrap);

}  // namespace mapgsa
