#include "mapgsa/universal.hpp"

#include "mapgsa/errors.hpp"
#include "mapgsa/parallel.hpp"
#include "mapgsa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mapgsa {

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::centered_balls: return "centered-balls";
    case FamilyKind::centered_squares: return "centered-squares";
    case FamilyKind::slides: return "slides";
    case FamilyKind::vorobev_quantiles: return "vorobev-quantiles";
  }
  return "unknown";
}

FamilyKind parse_family_kind(const std::string& name) {
  if (name == "centered-balls") return FamilyKind::centered_balls;
  if (name == "centered-squares") return FamilyKind::centered_squares;
  if (name == "slides") return FamilyKind::slides;
  if (name == "vorobev-quantiles") return FamilyKind::vorobev_quantiles;
  throw ParameterError("unknown test-set family '" + name + "'");
}

DistributionSpec default_law(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::centered_balls:
    case FamilyKind::centered_squares: return DistributionSpec::uniform(0.0, 0.5);
    case FamilyKind::slides: return DistributionSpec::uniform(0.0, 1.0);
    case FamilyKind::vorobev_quantiles: return DistributionSpec::truncated_normal(0.5, 0.15, 0.0, 1.0);
  }
  return DistributionSpec::uniform(0.0, 1.0);
}

TestSetFamily make_family(FamilyKind kind, const std::optional<DistributionSpec>& law,
                          std::optional<CoverageField> coverage, int axis) {
  TestSetFamily f;
  f.kind_ = kind;
  f.law_ = law.value_or(default_law(kind));
  validate(f.law_);
  if (f.law_.lo < 0.0 || f.law_.hi > 1.0) throw ParameterError("test-set law must be supported in [0, 1]");
  if (axis < 1 || axis > 3) throw ParameterError("slides axis must be 1, 2 or 3");
  f.axis_ = axis;
  if (kind == FamilyKind::vorobev_quantiles && !coverage) {
    throw ParameterError("vorobev-quantiles family requires a coverage field");
  }
  f.coverage_ = std::move(coverage);
  return f;
}

SetSample TestSetFamily::at(double a, const SetGrid& grid) const {
  switch (kind_) {
    case FamilyKind::vorobev_quantiles:
      check_same_grid(coverage_->grid(), grid);
      return vorobev_quantile(*coverage_, a);
    case FamilyKind::slides:
      if (axis_ == 3) {
        std::size_t l = 0;
        while (l < grid.nc && grid.unit_c(l) <= a) ++l;
        return SetSample::hypograph(grid, std::vector<SetSample::Level>(grid.columns(), static_cast<SetSample::Level>(l)));
      }
      [[fallthrough]];
    case FamilyKind::centered_balls:
    case FamilyKind::centered_squares: {
      PackedMask mask(grid.cells());
      for (std::size_t col = 0; col < grid.columns(); ++col) {
        const double x1 = grid.unit_x1(col), x2 = grid.unit_x2(col);
        for (std::size_t k = 0; k < grid.nc; ++k) {
          const double c = grid.unit_c(k);
          bool in = false;
          if (kind_ == FamilyKind::slides) {
            in = (axis_ == 1 ? x1 : x2) <= a;
          } else {
            const double d1 = x1 - 0.5, d2 = x2 - 0.5, d3 = c - 0.5;
            if (kind_ == FamilyKind::centered_balls) in = d1 * d1 + d2 * d2 + d3 * d3 <= a * a;
            else in = std::max({std::abs(d1), std::abs(d2), std::abs(d3)}) <= a;
          }
          if (in) mask.set(grid.cell(col, k));
        }
      }
      return SetSample::from_mask(grid, std::move(mask));
    }
  }
  throw ParameterError("unknown test-set family");
}

std::string TestSetFamily::describe() const {
  std::ostringstream out;
  out << to_string(kind_);
  if (kind_ == FamilyKind::slides) out << "(axis=" << axis_ << ")";
  return out.str();
}

std::vector<double> draw_parameters(const TestSetFamily& family, std::size_t N_a, std::uint64_t seed) {
  const Distribution law(family.law());
  Rng rng(seed);
  std::vector<double> a(N_a);
  for (auto& v : a) v = law.inverse_cdf(rng.uniform());
  return a;
}

Matrix test_set_distances(std::span<const SetSample> sets, const TestSetFamily& family, std::span<const double> a) {
  if (sets.empty()) throw ParameterError("test_set_distances: no sets");
  const SetGrid grid = sets.front().grid();
  for (const auto& s : sets) check_same_grid(grid, s.grid());
  const double m = static_cast<double>(grid.cells());
  Matrix d(static_cast<Eigen::Index>(sets.size()), static_cast<Eigen::Index>(a.size()));

  std::vector<PackedMask> masks;  // built lazily, only if some test set is not a hypograph
  bool masks_ready = false;
  for (std::size_t l = 0; l < a.size(); ++l) {
    const SetSample gamma = family.at(a[l], grid);
    if (gamma.is_hypograph() && std::all_of(sets.begin(), sets.end(), [](const SetSample& s) { return s.is_hypograph(); })) {
      parallel_for(sets.size(), [&](std::size_t j) {
        d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) = static_cast<double>(symdiff_count(sets[j], gamma)) / m;
      });
      continue;
    }
    if (!masks_ready) {
      masks.resize(sets.size());
      parallel_for(sets.size(), [&](std::size_t j) { masks[j] = sets[j].to_mask(); });
      masks_ready = true;
    }
    const PackedMask gm = gamma.to_mask();
    parallel_for(sets.size(), [&](std::size_t j) {
      d(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) = static_cast<double>(masks[j].xor_count(gm)) / m;
    });
  }
  return d;
}

std::vector<std::size_t> rank_successor(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  std::vector<std::size_t> succ(n);
  for (std::size_t k = 0; k < n; ++k) succ[order[k]] = order[(k + 1) % n];
  return succ;
}

UniversalRatio universal_ratio(std::span<const double> ui, const Matrix& distances, std::span<const std::size_t> subset) {
  const auto n_all = static_cast<std::size_t>(distances.rows());
  if (ui.size() != n_all) throw ParameterError("universal_ratio: input column and distance rows differ");
  std::vector<std::size_t> rows;
  if (subset.empty()) {
    rows.resize(n_all);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  } else {
    rows.assign(subset.begin(), subset.end());
  }
  const std::size_t n = rows.size();
  if (n < 3) throw ParameterError("universal estimator needs n >= 3");

  std::vector<double> local(n);
  for (std::size_t k = 0; k < n; ++k) local[k] = ui[rows[k]];
  const auto succ = rank_successor(local);

  const auto N_a = static_cast<std::size_t>(distances.cols());
  const double inv_n = 1.0 / static_cast<double>(n);
  double cross = 0.0, square = 0.0, mean_sq = 0.0;
  for (std::size_t l = 0; l < N_a; ++l) {
    const auto col = static_cast<Eigen::Index>(l);
    double s_cross = 0.0, s_square = 0.0, s_mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double dj = distances(static_cast<Eigen::Index>(rows[k]), col);
      const double dn = distances(static_cast<Eigen::Index>(rows[succ[k]]), col);
      s_cross += dj * dn;
      s_square += dj * dj;
      s_mean += dj;
    }
    const double mean = s_mean * inv_n;
    cross += s_cross * inv_n;
    square += s_square * inv_n;
    mean_sq += mean * mean;
  }
  const double inv_a = 1.0 / static_cast<double>(N_a);
  return {cross * inv_a - mean_sq * inv_a, square * inv_a - mean_sq * inv_a};
}

std::vector<UniversalEstimate> universal_indices(const Matrix& inputs, std::span<const SetSample> sets,
                                                 const TestSetFamily& family, std::size_t N_a, std::uint64_t seedQ,
                                                 const std::optional<BootstrapSpec>& bootstrap,
                                                 const std::vector<std::string>& names) {
  const auto n = static_cast<std::size_t>(inputs.rows());
  if (n != sets.size()) throw ParameterError("universal: inputs and sets differ in length");
  if (n < 3) throw ParameterError("universal estimator needs n >= 3");
  if (N_a < 1) throw ParameterError("universal estimator needs N_a >= 1");

  const auto a = draw_parameters(family, N_a, seedQ);
  const Matrix d = test_set_distances(sets, family, a);

  std::vector<UniversalEstimate> out;
  for (std::size_t i = 0; i < static_cast<std::size_t>(inputs.cols()); ++i) {
    const auto column = inputs.col(static_cast<Eigen::Index>(i));
    const std::vector<double> ui(column.begin(), column.end());
    const auto ratio = universal_ratio(ui, d);
    if (!(ratio.denominator > 0.0)) {
      throw DegenerateError("universal: output is invariant under every test set (zero denominator)");
    }
    UniversalEstimate e;
    e.input = i < names.size() ? names[i] : "u" + std::to_string(i + 1);
    e.numerator = ratio.numerator;
    e.denominator = ratio.denominator;
    e.estimate = ratio.numerator / ratio.denominator;
    e.family = family.describe();
    e.N_a = N_a;
    e.n = n;
    if (bootstrap) {
      auto statistic = [&](std::span<const std::size_t> idx) {
        const auto r = universal_ratio(ui, d, idx);
        if (!(r.denominator > 0.0)) throw DegenerateError("zero denominator in bootstrap replicate");
        return r.numerator / r.denominator;
      };
      const auto ci = bootstrap_ci(statistic, n, *bootstrap);
      e.ci_lo = ci.lo;
      e.ci_hi = ci.hi;
      e.has_ci = true;
      e.B = bootstrap->B;
    }
    out.push_back(std::move(e));
  }
  return out;
}

UniversalEstimate universal_index(std::size_t i, const Matrix& inputs, std::span<const SetSample> sets,
                                  const TestSetFamily& family, std::size_t N_a, std::uint64_t seedQ,
                                  const std::optional<BootstrapSpec>& bootstrap) {
  if (i >= static_cast<std::size_t>(inputs.cols())) throw ParameterError("universal_index: input index out of range");
  Matrix column = inputs.col(static_cast<Eigen::Index>(i));
  auto all = universal_indices(column, sets, family, N_a, seedQ, bootstrap);
  all.front().input = "u" + std::to_string(i + 1);
  return all.front();
}

}  // namespace mapgsa
