#include "mapgsa/sobol_map.hpp"

#include "mapgsa/errors.hpp"
#include "mapgsa/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace mapgsa {
namespace {

constexpr std::size_t kBatch = 32;
constexpr double kDegenerateRatio = 1e-12;

std::vector<double> row_of(const Matrix& m, std::size_t j) {
  const auto row = m.row(static_cast<Eigen::Index>(j));
  return {row.begin(), row.end()};
}

}  // namespace

SobolMapResult sobol_maps(const MapModel& model, const PickFreezeDesign& design, bool keep_samples) {
  const std::size_t n = design.n();
  const std::size_t p = design.p();
  if (p != model.inputs().size()) throw ParameterError("design does not match the model input space");
  if (n < 2) throw ParameterError("sobol_maps needs n >= 2");

  const std::size_t cells = model.grid().cells();
  SobolMapResult r;
  r.grid = model.grid();
  r.n = n;
  for (const auto& d : model.inputs().dims()) r.inputs.push_back(d.name);

  std::vector<double> mean(cells, 0.0), m2(cells, 0.0);
  std::vector<std::vector<double>> numerator(p, std::vector<double>(cells, 0.0));
  Matrix samples;
  if (keep_samples) {
    samples.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cells));
    r.contributions.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  }

  // Fields of one batch: per row, [U, U', U~1, ..., U~p].
  const std::size_t per_row = p + 2;
  std::vector<std::vector<double>> fields;
  for (std::size_t start = 0; start < n; start += kBatch) {
    const std::size_t stop = std::min(n, start + kBatch);
    fields.assign((stop - start) * per_row, {});
    parallel_for(fields.size(), [&](std::size_t k) {
      const std::size_t j = start + k / per_row;
      const std::size_t which = k % per_row;
      std::vector<double> u;
      if (which == 0) u = row_of(design.U, j);
      else if (which == 1) u = row_of(design.Uprime, j);
      else u = design.substituted_row(which - 2, j);
      fields[k] = model.evaluate(u).values;
    });
    // Sequential over j: fixed reduction order per cell.
    for (std::size_t j = start; j < stop; ++j) {
      const auto* base = &fields[(j - start) * per_row];
      const auto& fu = base[0];
      const auto& fp = base[1];
      const double count = static_cast<double>(j + 1);
      for (std::size_t c = 0; c < cells; ++c) {
        const double delta = fu[c] - mean[c];
        mean[c] += delta / count;
        m2[c] += delta * (fu[c] - mean[c]);
      }
      for (std::size_t i = 0; i < p; ++i) {
        const auto& ft = base[2 + i];
        auto& num = numerator[i];
        double total = 0.0;
        for (std::size_t c = 0; c < cells; ++c) {
          const double term = fp[c] * (ft[c] - fu[c]);
          num[c] += term;
          total += term;
        }
        if (keep_samples) r.contributions(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = total;
      }
      if (keep_samples) {
        for (std::size_t c = 0; c < cells; ++c) samples(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = fu[c];
      }
    }
  }
  r.evaluations = n * per_row;

  r.variance.resize(cells);
  double scale = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    r.variance[c] = m2[c] / static_cast<double>(n - 1);
    scale = std::max(scale, mean[c] * mean[c] + r.variance[c]);
  }
  r.degenerate.assign(cells, 0);
  for (std::size_t c = 0; c < cells; ++c) {
    if (!(r.variance[c] > kDegenerateRatio * scale)) {
      r.degenerate[c] = 1;
      ++r.degenerate_cells;
    }
  }
  if (r.degenerate_cells == cells) throw DegenerateError("sobol_maps: output variance is zero at every cell");

  r.index_maps.assign(p, std::vector<double>(cells, 0.0));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t c = 0; c < cells; ++c) {
      if (!r.degenerate[c]) r.index_maps[i][c] = numerator[i][c] / static_cast<double>(n) / r.variance[c];
    }
  }

  if (keep_samples) {
    r.centered.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cells - r.degenerate_cells));
    Eigen::Index col = 0;
    for (std::size_t c = 0; c < cells; ++c) {
      if (r.degenerate[c]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        r.centered(static_cast<Eigen::Index>(j), col) = samples(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) - mean[c];
      }
      ++col;
    }
  }
  return r;
}

double generalized_index(const SobolMapResult& result, std::size_t i) {
  if (i >= result.index_maps.size()) throw ParameterError("generalized_index: input index out of range");
  double total = 0.0;
  for (std::size_t c = 0; c < result.variance.size(); ++c) {
    if (!result.degenerate[c]) total += result.variance[c];
  }
  if (!(total > 0.0)) throw DegenerateError("generalized_index: all variances are zero");
  double s = 0.0;
  for (std::size_t c = 0; c < result.variance.size(); ++c) {
    if (!result.degenerate[c]) s += result.variance[c] / total * result.index_maps[i][c];
  }
  return s;
}

std::vector<IndexEstimate> generalized_sobol(const MapModel& model, const PickFreezeDesign& design,
                                             const std::optional<BootstrapSpec>& bootstrap) {
  const SobolMapResult r = sobol_maps(model, design, bootstrap.has_value());
  const std::size_t n = r.n;
  std::vector<IndexEstimate> out;
  for (std::size_t i = 0; i < r.inputs.size(); ++i) {
    IndexEstimate e;
    e.input = r.inputs[i];
    e.method = "generalized-sobol";
    e.estimate = generalized_index(r, i);
    e.n = n;
    if (bootstrap) {
      // S_gen = sum_x Num_i(x) / sum_x Var(x); both sums are recomputed from
      // the resampled rows (multiplicities c_j).
      auto statistic = [&](std::span<const std::size_t> idx) {
        const auto counts = multiplicities(idx, n);
        double num = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          num += static_cast<double>(counts[j]) * r.contributions(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
        }
        const double m = static_cast<double>(idx.size());
        num /= m;
        const auto cols = static_cast<std::size_t>(r.centered.cols());
        std::vector<double> s1(cols, 0.0), s2(cols, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
          if (counts[j] == 0) continue;
          const double w = static_cast<double>(counts[j]);
          const double* row = r.centered.data() + j * cols;
          for (std::size_t c = 0; c < cols; ++c) {
            s1[c] += w * row[c];
            s2[c] += w * row[c] * row[c];
          }
        }
        double den = 0.0;
        for (std::size_t c = 0; c < cols; ++c) den += (s2[c] - s1[c] * s1[c] / m) / (m - 1.0);
        if (!(den > 0.0)) throw DegenerateError("zero variance in bootstrap replicate");
        return num / den;
      };
      const auto ci = bootstrap_ci(statistic, n, *bootstrap);
      e.ci_lo = ci.lo;
      e.ci_hi = ci.hi;
      e.has_ci = true;
      e.B = bootstrap->B;
      e.seed = bootstrap->seed;
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace mapgsa
