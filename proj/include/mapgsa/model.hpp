#pragma once

#include "mapgsa/sampling.hpp"
#include "mapgsa/setgrid.hpp"

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mapgsa {

/// Regular lattice of n1 x n2 cell centers over a rectangle of the plane.
struct DomainGrid {
  double x1_lo = 0.0, x1_hi = 1.0;
  double x2_lo = 0.0, x2_hi = 1.0;
  std::size_t n1 = 1, n2 = 1;

  std::size_t cells() const noexcept { return n1 * n2; }
  /// Cell center in [0,1] coordinates.
  double unit_x1(std::size_t k1) const noexcept { return (static_cast<double>(k1) + 0.5) / n1; }
  double unit_x2(std::size_t k2) const noexcept { return (static_cast<double>(k2) + 0.5) / n2; }
  double x1(std::size_t k1) const noexcept { return x1_lo + (x1_hi - x1_lo) * unit_x1(k1); }
  double x2(std::size_t k2) const noexcept { return x2_lo + (x2_hi - x2_lo) * unit_x2(k2); }

  bool operator==(const DomainGrid&) const = default;
};

void validate(const DomainGrid& grid);

/// Cell-centered lattice of nc level values over [c_min, c_max].
struct LevelGrid {
  double c_min = 0.0;
  double c_max = 1.0;
  std::size_t nc = 1;

  double level(std::size_t k) const noexcept {
    return c_min + (c_max - c_min) * (static_cast<double>(k) + 0.5) / static_cast<double>(nc);
  }
};

void validate(const LevelGrid& levels);

/// Scalar values on a DomainGrid, row-major: values[k1 * n2 + k2].
struct MapField {
  DomainGrid grid;
  std::vector<double> values;

  double at(std::size_t k1, std::size_t k2) const { return values[k1 * grid.n2 + k2]; }
};

enum class ModelKind { synthetic_separable, synthetic_plume, external_table };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

/// Map-valued model u -> Phi_u. Implementations are immutable and their
/// evaluation is deterministic; the evaluation counter is bookkeeping only.
class MapModel {
 public:
  virtual ~MapModel() = default;

  const InputSpace& inputs() const noexcept { return inputs_; }
  const DomainGrid& grid() const noexcept { return grid_; }
  virtual ModelKind kind() const = 0;

  /// Throws DomainError when u lies outside the input bounds.
  MapField evaluate(std::span<const double> u) const;

  std::size_t evaluations() const noexcept { return evaluations_.load(); }
  void reset_evaluations() const noexcept { evaluations_.store(0); }

 protected:
  MapModel(InputSpace inputs, DomainGrid grid);
  virtual void compute(std::span<const double> u, std::span<double> out) const = 0;

 private:
  InputSpace inputs_;
  DomainGrid grid_;
  mutable std::atomic<std::size_t> evaluations_{0};
};

using ModelPtr = std::shared_ptr<const MapModel>;

// ---------------------------------------------------------------------------
// Synthetic separable model: Phi_u(x) = m(x) + sum_i a_i(x) g_i(u_i).

enum class BasisKind { constant, sin1, sin2, cos1, cos2, x1, x2, bump };
enum class LinkKind { identity, square, cube, sin, exp };

std::string to_string(BasisKind kind);
BasisKind parse_basis_kind(const std::string& name);
std::string to_string(LinkKind kind);
LinkKind parse_link_kind(const std::string& name);

/// scale * b(x1, x2) on unit coordinates: sin1 = sin(2 pi x1), x1 = x1,
/// bump = exp(-|x - (cx, cy)|^2 / (2 width^2)), constant = 1.
struct BasisMap {
  BasisKind kind = BasisKind::constant;
  double scale = 1.0;
  double cx = 0.5, cy = 0.5, width = 0.2;

  double operator()(double x1, double x2) const;
};

double apply_link(LinkKind link, double u);

struct SeparableTerm {
  std::size_t input = 0;
  BasisMap basis;
  LinkKind link = LinkKind::identity;
};

struct SeparableParams {
  BasisMap mean{BasisKind::constant, 0.0};
  std::vector<SeparableTerm> terms;
};

class SeparableModel final : public MapModel {
 public:
  SeparableModel(InputSpace inputs, DomainGrid grid, SeparableParams params);

  ModelKind kind() const override { return ModelKind::synthetic_separable; }
  const SeparableParams& params() const noexcept { return params_; }

  /// Var g_i(U_i) by quadrature of the input density (0 for inputs without a term).
  const std::vector<double>& link_variances() const noexcept { return link_var_; }
  /// Exact pointwise first-order indices S_i(x) = a_i^2 V_i / sum_j a_j^2 V_j
  /// (0 where the total variance vanishes), one row-major map per input.
  std::vector<std::vector<double>> first_order_truth() const;
  /// Exact generalized indices sum_x a_i^2 V_i / sum_x sum_j a_j^2 V_j.
  std::vector<double> generalized_truth() const;

 protected:
  void compute(std::span<const double> u, std::span<double> out) const override;

 private:
  SeparableParams params_;
  std::vector<double> mean_map_;
  std::vector<std::vector<double>> term_maps_;
  std::vector<double> link_var_;
};

// ---------------------------------------------------------------------------
// Synthetic plume: anisotropic Gaussian bump whose direction, spread,
// amplitude and background level are driven by designated inputs.

struct PlumeParams {
  std::optional<std::size_t> angle_input, spread_input, amplitude_input, background_input;
  double angle_lo = -1.2, angle_hi = 1.2;
  double spread_lo = 0.08, spread_hi = 0.2;
  double amplitude_lo = 0.5, amplitude_hi = 1.5;
  double background_lo = 0.0, background_hi = 0.3;
  double source_x1 = 0.3, source_x2 = 0.5;
  double distance = 0.25;
  double aspect = 0.4;
};

class PlumeModel final : public MapModel {
 public:
  PlumeModel(InputSpace inputs, DomainGrid grid, PlumeParams params);
  ModelKind kind() const override { return ModelKind::synthetic_plume; }
  const PlumeParams& params() const noexcept { return params_; }

 protected:
  void compute(std::span<const double> u, std::span<double> out) const override;

 private:
  double driven(const std::optional<std::size_t>& input, std::span<const double> u, double lo, double hi) const;
  PlumeParams params_;
};

using SyntheticParams = std::variant<SeparableParams, PlumeParams>;

/// Builds a synthetic model; throws ParameterError when kind and params disagree
/// or reference inputs outside the space.
ModelPtr make_synthetic(ModelKind kind, const SyntheticParams& params, const InputSpace& inputs,
                        const DomainGrid& grid);

// ---------------------------------------------------------------------------
// External table of precomputed (u, field) pairs.

struct TableRecord {
  std::vector<double> u;
  std::vector<double> field;
};

struct TableData {
  std::size_t n1 = 0, n2 = 0;
  std::vector<TableRecord> records;
};

/// Text format: header line "n1 n2"; then per record a line "u1 ... up"
/// followed by n1*n2 whitespace-separated values in row-major order.
TableData parse_table(const std::string& text);
TableData load_table(const std::string& path);
std::string format_table(const TableData& data);

/// Returns stored fields by exact lookup of u; unknown u is a DomainError.
class TableModel final : public MapModel {
 public:
  TableModel(InputSpace inputs, DomainGrid grid, TableData data);
  ModelKind kind() const override { return ModelKind::external_table; }
  const TableData& data() const noexcept { return data_; }
  /// Stored inputs as an n x p matrix (row order of the file).
  Matrix stored_inputs() const;

 protected:
  void compute(std::span<const double> u, std::span<double> out) const override;

 private:
  TableData data_;
};

/// Restricts a model to a subspace: inputs with a fixed value are removed
/// from the input space and re-inserted at evaluation.
class FrozenModel final : public MapModel {
 public:
  FrozenModel(ModelPtr base, std::vector<std::optional<double>> fixed);
  ModelKind kind() const override { return base_->kind(); }

 protected:
  void compute(std::span<const double> u, std::span<double> out) const override;

 private:
  static InputSpace free_space(const InputSpace& full, const std::vector<std::optional<double>>& fixed);
  ModelPtr base_;
  std::vector<std::optional<double>> fixed_;
};

// ---------------------------------------------------------------------------
// Set-valued lift.

SetGrid set_grid(const DomainGrid& grid, const LevelGrid& levels);

/// Hypograph {(x, c) : c <= Phi(x)}: per cell, the number of level values
/// c_k with c_k <= field value (inclusive), clamped to [0, nc].
SetSample lift_hypograph(const MapField& field, const LevelGrid& levels);

/// Hypograph level of one value; exact with respect to LevelGrid::level.
std::size_t hypograph_level(double value, const LevelGrid& levels);

/// Evaluates the model on each row of `inputs` (in parallel) and lifts the fields.
std::vector<SetSample> lift_all(const MapModel& model, const LevelGrid& levels, const Matrix& inputs);

/// Level range from a pilot sample: [min, max] of the pilot fields widened by
/// 5% of the range on each side.
LevelGrid auto_levels(const MapModel& model, std::size_t nc, std::uint64_t seed, std::size_t pilot = 64);

}  // namespace mapgsa
