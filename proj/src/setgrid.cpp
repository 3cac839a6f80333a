#include "mapgsa/setgrid.hpp"

#include "mapgsa/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mapgsa {

void check_same_grid(const SetGrid& a, const SetGrid& b) {
  if (!(a == b)) {
    throw GridMismatch("set grids differ: " + std::to_string(a.n1) + "x" + std::to_string(a.n2) + "x" +
                       std::to_string(a.nc) + " vs " + std::to_string(b.n1) + "x" + std::to_string(b.n2) + "x" +
                       std::to_string(b.nc));
  }
}

std::size_t PackedMask::count() const noexcept {
  std::size_t total = 0;
  for (auto w : words_) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

std::size_t PackedMask::xor_count(const PackedMask& other) const noexcept {
  std::size_t total = 0;
  for (std::size_t k = 0; k < words_.size(); ++k) total += static_cast<std::size_t>(std::popcount(words_[k] ^ other.words_[k]));
  return total;
}

std::size_t PackedMask::and_count(const PackedMask& other) const noexcept {
  std::size_t total = 0;
  for (std::size_t k = 0; k < words_.size(); ++k) total += static_cast<std::size_t>(std::popcount(words_[k] & other.words_[k]));
  return total;
}

SetSample SetSample::hypograph(const SetGrid& grid, std::vector<Level> levels) {
  if (levels.size() != grid.columns()) throw GridMismatch("hypograph level count does not match the grid");
  for (auto l : levels) {
    if (l > grid.nc) throw ParameterError("hypograph level exceeds nc");
  }
  SetSample s;
  s.grid_ = grid;
  s.rep_ = std::move(levels);
  return s;
}

SetSample SetSample::from_mask(const SetGrid& grid, PackedMask mask) {
  if (mask.size() != grid.cells()) throw GridMismatch("mask size does not match the grid");
  SetSample s;
  s.grid_ = grid;
  s.rep_ = std::move(mask);
  return s;
}

SetSample SetSample::empty(const SetGrid& grid) { return hypograph(grid, std::vector<Level>(grid.columns(), 0)); }

SetSample SetSample::full(const SetGrid& grid) {
  return hypograph(grid, std::vector<Level>(grid.columns(), static_cast<Level>(grid.nc)));
}

std::span<const SetSample::Level> SetSample::levels() const {
  const auto* levels = std::get_if<std::vector<Level>>(&rep_);
  if (levels == nullptr) throw std::logic_error("set is not in hypograph form");
  return *levels;
}

PackedMask SetSample::to_mask() const {
  if (const auto* mask = std::get_if<PackedMask>(&rep_)) return *mask;
  PackedMask mask(grid_.cells());
  const auto& levels = std::get<std::vector<Level>>(rep_);
  for (std::size_t col = 0; col < levels.size(); ++col) {
    for (std::size_t k = 0; k < levels[col]; ++k) mask.set(grid_.cell(col, k));
  }
  return mask;
}

std::optional<SetSample> SetSample::as_hypograph() const {
  if (is_hypograph()) return *this;
  const auto& mask = std::get<PackedMask>(rep_);
  std::vector<Level> levels(grid_.columns(), 0);
  for (std::size_t col = 0; col < grid_.columns(); ++col) {
    std::size_t l = 0;
    while (l < grid_.nc && mask.test(grid_.cell(col, l))) ++l;
    for (std::size_t k = l; k < grid_.nc; ++k) {
      if (mask.test(grid_.cell(col, k))) return std::nullopt;
    }
    levels[col] = static_cast<Level>(l);
  }
  return hypograph(grid_, std::move(levels));
}

bool SetSample::contains(std::size_t column, std::size_t level) const {
  if (const auto* levels = std::get_if<std::vector<Level>>(&rep_)) return level < (*levels)[column];
  return std::get<PackedMask>(rep_).test(grid_.cell(column, level));
}

std::size_t SetSample::count() const {
  if (const auto* levels = std::get_if<std::vector<Level>>(&rep_)) {
    return std::accumulate(levels->begin(), levels->end(), std::size_t{0});
  }
  return std::get<PackedMask>(rep_).count();
}

bool same_set(const SetSample& a, const SetSample& b) {
  return a.grid_ == b.grid_ && symdiff_count(a, b) == 0;
}

double volume(const SetSample& s) {
  return static_cast<double>(s.count()) / static_cast<double>(s.grid().cells());
}

std::size_t symdiff_count(const SetSample& a, const SetSample& b) {
  check_same_grid(a.grid(), b.grid());
  if (a.is_hypograph() && b.is_hypograph()) {
    const auto la = a.levels();
    const auto lb = b.levels();
    std::size_t total = 0;
    for (std::size_t k = 0; k < la.size(); ++k) {
      total += static_cast<std::size_t>(std::abs(static_cast<int>(la[k]) - static_cast<int>(lb[k])));
    }
    return total;
  }
  return a.to_mask().xor_count(b.to_mask());
}

double symdiff_volume(const SetSample& a, const SetSample& b) {
  return static_cast<double>(symdiff_count(a, b)) / static_cast<double>(a.grid().cells());
}

double intersection_volume(const SetSample& a, const SetSample& b) {
  check_same_grid(a.grid(), b.grid());
  std::size_t total = 0;
  if (a.is_hypograph() && b.is_hypograph()) {
    const auto la = a.levels();
    const auto lb = b.levels();
    for (std::size_t k = 0; k < la.size(); ++k) total += std::min(la[k], lb[k]);
  } else {
    total = a.to_mask().and_count(b.to_mask());
  }
  return static_cast<double>(total) / static_cast<double>(a.grid().cells());
}

CoverageField::CoverageField(const SetGrid& grid, std::size_t samples, std::vector<std::uint32_t> counts)
    : grid_(grid), samples_(samples), counts_(std::move(counts)) {
  if (samples_ == 0) throw ParameterError("coverage needs at least one sample");
  if (counts_.size() != grid_.cells()) throw GridMismatch("coverage size does not match the grid");
  for (auto c : counts_) {
    if (c > samples_) throw ParameterError("coverage count exceeds sample size");
  }
}

bool CoverageField::column_monotone() const {
  for (std::size_t col = 0; col < grid_.columns(); ++col) {
    for (std::size_t k = 1; k < grid_.nc; ++k) {
      if (counts_[grid_.cell(col, k)] > counts_[grid_.cell(col, k - 1)]) return false;
    }
  }
  return true;
}

CoverageField coverage(std::span<const SetSample> samples) {
  if (samples.empty()) throw ParameterError("coverage of an empty sample list");
  const SetGrid grid = samples.front().grid();
  for (const auto& s : samples) check_same_grid(grid, s.grid());

  std::vector<std::uint32_t> counts(grid.cells(), 0);
  const bool all_hypographs =
      std::all_of(samples.begin(), samples.end(), [](const SetSample& s) { return s.is_hypograph(); });
  if (all_hypographs) {
    // Histogram of levels per column, then suffix sums: count(k) = #{s : l_s > k}.
    std::vector<std::uint32_t> hist(grid.nc + 1);
    for (std::size_t col = 0; col < grid.columns(); ++col) {
      std::fill(hist.begin(), hist.end(), 0U);
      for (const auto& s : samples) ++hist[s.levels()[col]];
      std::uint32_t above = 0;
      for (std::size_t k = grid.nc; k-- > 0;) {
        above += hist[k + 1];
        counts[grid.cell(col, k)] = above;
      }
    }
  } else {
    for (const auto& s : samples) {
      const PackedMask mask = s.to_mask();
      for (std::size_t cell = 0; cell < grid.cells(); ++cell) counts[cell] += mask.test(cell) ? 1U : 0U;
    }
  }
  return CoverageField(grid, samples.size(), std::move(counts));
}

SetSample vorobev_quantile(const CoverageField& c, double a) {
  const SetGrid& grid = c.grid();
  if (c.column_monotone()) {
    std::vector<SetSample::Level> levels(grid.columns(), 0);
    for (std::size_t col = 0; col < grid.columns(); ++col) {
      std::size_t l = 0;
      while (l < grid.nc && c.at(col, l) >= a) ++l;
      levels[col] = static_cast<SetSample::Level>(l);
    }
    return SetSample::hypograph(grid, std::move(levels));
  }
  PackedMask mask(grid.cells());
  for (std::size_t cell = 0; cell < grid.cells(); ++cell) {
    if (c.at(cell) >= a) mask.set(cell);
  }
  return SetSample::from_mask(grid, std::move(mask));
}

std::string dump_rle(const SetSample& s) {
  const SetGrid& g = s.grid();
  const PackedMask mask = s.to_mask();
  std::ostringstream out;
  out << g.n1 << ' ' << g.n2 << ' ' << g.nc << '\n';
  bool current = false;
  std::size_t run = 0;
  bool first = true;
  for (std::size_t cell = 0; cell < g.cells(); ++cell) {
    if (mask.test(cell) == current) {
      ++run;
      continue;
    }
    out << (first ? "" : " ") << run;
    first = false;
    current = !current;
    run = 1;
  }
  out << (first ? "" : " ") << run << '\n';
  return out.str();
}

}  // namespace mapgsa
