#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mapgsa {

/// Shape of the discretized 3-D space X = D x C: n1 x n2 map cells (columns),
/// each split into nc level cells. Volumes are fractions of the m = n1 n2 nc
/// lattice points, i.e. X is rescaled to unit volume.
struct SetGrid {
  std::size_t n1 = 1;
  std::size_t n2 = 1;
  std::size_t nc = 1;

  std::size_t columns() const noexcept { return n1 * n2; }
  std::size_t cells() const noexcept { return n1 * n2 * nc; }
  /// Flat cell index; the level index varies fastest.
  std::size_t cell(std::size_t column, std::size_t level) const noexcept { return column * nc + level; }

  /// Rescaled [0,1]^3 coordinates of a lattice point (cell centers).
  double unit_x1(std::size_t column) const noexcept { return (static_cast<double>(column / n2) + 0.5) / n1; }
  double unit_x2(std::size_t column) const noexcept { return (static_cast<double>(column % n2) + 0.5) / n2; }
  double unit_c(std::size_t level) const noexcept { return (static_cast<double>(level) + 0.5) / nc; }

  bool operator==(const SetGrid&) const = default;
};

void check_same_grid(const SetGrid& a, const SetGrid& b);

/// Fixed-size bitset packed in 64-bit words.
class PackedMask {
 public:
  PackedMask() = default;
  explicit PackedMask(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

  std::size_t size() const noexcept { return bits_; }
  bool test(std::size_t k) const noexcept { return (words_[k >> 6] >> (k & 63)) & 1U; }
  void set(std::size_t k, bool value = true) noexcept {
    const std::uint64_t bit = std::uint64_t{1} << (k & 63);
    if (value) words_[k >> 6] |= bit; else words_[k >> 6] &= ~bit;
  }
  std::size_t count() const noexcept;
  std::size_t xor_count(const PackedMask& other) const noexcept;
  std::size_t and_count(const PackedMask& other) const noexcept;
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  bool operator==(const PackedMask&) const = default;

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint64_t> words_;
};

/// One realization of a random subset of the lattice.
///
/// The primary representation stores, per map cell, the hypograph level l:
/// the set holds the lattice points (column, k) with k < l. Sets that are not
/// column-monotone (balls, cubes, thresholded coverages) use a packed mask.
class SetSample {
 public:
  using Level = std::uint16_t;

  SetSample() = default;

  static SetSample hypograph(const SetGrid& grid, std::vector<Level> levels);
  static SetSample from_mask(const SetGrid& grid, PackedMask mask);
  static SetSample empty(const SetGrid& grid);
  static SetSample full(const SetGrid& grid);

  const SetGrid& grid() const noexcept { return grid_; }
  bool is_hypograph() const noexcept { return std::holds_alternative<std::vector<Level>>(rep_); }
  /// Levels of a hypograph set; throws std::logic_error for mask sets.
  std::span<const Level> levels() const;

  PackedMask to_mask() const;
  /// Hypograph form when the set is column-monotone, otherwise nullopt.
  std::optional<SetSample> as_hypograph() const;

  bool contains(std::size_t column, std::size_t level) const;
  std::size_t count() const;

  /// Equality of the represented sets (independent of representation).
  friend bool same_set(const SetSample& a, const SetSample& b);

 private:
  SetGrid grid_;
  std::variant<std::vector<Level>, PackedMask> rep_;
};

/// Fraction of lattice points inside s.
double volume(const SetSample& s);
/// Fraction of lattice points in exactly one of a, b.
double symdiff_volume(const SetSample& a, const SetSample& b);
/// Lattice point count of the symmetric difference.
std::size_t symdiff_count(const SetSample& a, const SetSample& b);
double intersection_volume(const SetSample& a, const SetSample& b);

/// Empirical membership probability per lattice point, stored as exact counts.
class CoverageField {
 public:
  CoverageField(const SetGrid& grid, std::size_t samples, std::vector<std::uint32_t> counts);

  const SetGrid& grid() const noexcept { return grid_; }
  std::size_t samples() const noexcept { return samples_; }
  std::uint32_t count(std::size_t cell) const { return counts_[cell]; }
  double at(std::size_t cell) const { return static_cast<double>(counts_[cell]) / static_cast<double>(samples_); }
  double at(std::size_t column, std::size_t level) const { return at(grid_.cell(column, level)); }
  /// True when values are non-increasing along the level axis in every column.
  bool column_monotone() const;

 private:
  SetGrid grid_;
  std::size_t samples_;
  std::vector<std::uint32_t> counts_;
};

/// Per-cell mean of membership indicators. Throws ParameterError on an empty list.
CoverageField coverage(std::span<const SetSample> samples);

/// {x : coverage(x) >= a}. a = 0.5 gives the Vorob'ev median. The result is a
/// hypograph whenever the coverage is column-monotone.
SetSample vorobev_quantile(const CoverageField& c, double a);

/// Run-length encoded text dump of the membership bits, for debugging:
/// "n1 n2 nc" header, then alternating run lengths starting with a 0-run.
std::string dump_rle(const SetSample& s);

}  // namespace mapgsa
