#pragma once

#include "mapgsa/resample.hpp"
#include "mapgsa/sampling.hpp"
#include "mapgsa/setgrid.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mapgsa {

enum class FamilyKind { centered_balls, centered_squares, slides, vorobev_quantiles };

std::string to_string(FamilyKind kind);
FamilyKind parse_family_kind(const std::string& name);

/// Default law of the test-set parameter: uniform on [0, 1/2] for balls and
/// squares, uniform on [0, 1] for slides, normal(1/2, 0.15) truncated to
/// [0, 1] for Vorob'ev quantiles.
DistributionSpec default_law(FamilyKind kind);

/// Parameterized test sets gamma_a on the rescaled unit cube.
class TestSetFamily {
 public:
  FamilyKind kind() const noexcept { return kind_; }
  const DistributionSpec& law() const noexcept { return law_; }
  int axis() const noexcept { return axis_; }
  const std::optional<CoverageField>& coverage() const noexcept { return coverage_; }

  /// gamma_a realized on `grid`: Euclidean balls / sup-norm balls of radius a
  /// around (1/2, 1/2, 1/2), half-spaces {x_axis <= a}, or {coverage >= a}.
  SetSample at(double a, const SetGrid& grid) const;

  std::string describe() const;

 private:
  friend TestSetFamily make_family(FamilyKind, const std::optional<DistributionSpec>&,
                                   std::optional<CoverageField>, int);
  FamilyKind kind_ = FamilyKind::centered_balls;
  DistributionSpec law_;
  int axis_ = 3;
  std::optional<CoverageField> coverage_;
};

/// Throws ParameterError when a quantile family lacks a coverage field, the
/// axis is not in {1, 2, 3}, or the law puts mass outside [0, 1].
TestSetFamily make_family(FamilyKind kind, const std::optional<DistributionSpec>& law = std::nullopt,
                          std::optional<CoverageField> coverage = std::nullopt, int axis = 3);

/// Draws N_a parameters a_l i.i.d. from the family's law.
std::vector<double> draw_parameters(const TestSetFamily& family, std::size_t N_a, std::uint64_t seed);

/// d(j, l) = vol(sets[j] Delta gamma_{a_l}), an n x N_a matrix.
Matrix test_set_distances(std::span<const SetSample> sets, const TestSetFamily& family, std::span<const double> a);

/// Rank successor: succ[j] is the sample that follows j when `values` is
/// sorted ascending (ties by index); the largest wraps to the smallest.
std::vector<std::size_t> rank_successor(std::span<const double> values);

struct UniversalRatio {
  double numerator = 0.0;
  double denominator = 0.0;
};

/// Rank-based numerator and denominator on the sample rows `subset` (all rows
/// when empty); ranks are recomputed within the subset.
UniversalRatio universal_ratio(std::span<const double> ui, const Matrix& distances,
                               std::span<const std::size_t> subset = {});

struct UniversalEstimate {
  std::string input;
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool has_ci = false;
  double numerator = 0.0;
  double denominator = 0.0;
  std::string family;
  std::size_t N_a = 0;
  std::size_t n = 0;
  std::size_t B = 0;
};

/// Universal indices of every input (columns of `inputs`, whose row j produced
/// sets[j]). The a_l draws are shared across inputs. Intervals come from
/// `bootstrap` (subsampling without replacement is the intended mode).
/// Throws DegenerateError when the denominator is not positive.
std::vector<UniversalEstimate> universal_indices(const Matrix& inputs, std::span<const SetSample> sets,
                                                 const TestSetFamily& family, std::size_t N_a, std::uint64_t seedQ,
                                                 const std::optional<BootstrapSpec>& bootstrap = std::nullopt,
                                                 const std::vector<std::string>& names = {});

UniversalEstimate universal_index(std::size_t i, const Matrix& inputs, std::span<const SetSample> sets,
                                  const TestSetFamily& family, std::size_t N_a, std::uint64_t seedQ,
                                  const std::optional<BootstrapSpec>& bootstrap = std::nullopt);

}  // namespace mapgsa
