#include "mapgsa/vorobev.hpp"

#include "mapgsa/errors.hpp"
#include "mapgsa/parallel.hpp"
#include "mapgsa/rng.hpp"

namespace mapgsa {
namespace {

std::vector<SetSample> inner_sets(const MapModel& model, const LevelGrid& levels, std::size_t i, double ui,
                                  std::size_t n_inner, std::uint64_t seed) {
  const auto& space = model.inputs();
  if (i >= space.size()) throw ParameterError("vorobev: input index out of range");
  const auto& d = space.dim(i).dist;
  if (!(ui >= d.lo && ui <= d.hi)) throw DomainError("conditional_median: u_i outside the bounds of '" + space.dim(i).name + "'");
  Rng rng(seed);
  std::vector<SetSample> sets;
  sets.reserve(n_inner);
  std::vector<double> u(space.size());
  for (std::size_t l = 0; l < n_inner; ++l) {
    for (std::size_t k = 0; k < space.size(); ++k) {
      u[k] = k == i ? ui : space.distribution(k).inverse_cdf(rng.uniform());
    }
    sets.push_back(lift_hypograph(model.evaluate(u), levels));
  }
  return sets;
}

}  // namespace

SetSample conditional_median(const MapModel& model, const LevelGrid& levels, std::size_t i, double ui,
                             std::size_t n_inner, std::uint64_t seed) {
  if (n_inner < 1) throw ParameterError("conditional_median needs n_inner >= 1");
  const auto sets = inner_sets(model, levels, i, ui, n_inner, seed);
  return vorobev_quantile(coverage(sets), 0.5);
}

VorobevEstimate vorobev_index(const MapModel& model, const LevelGrid& levels, std::size_t i, std::size_t n_outer,
                              std::size_t n_inner, std::uint64_t seed, const std::optional<BootstrapSpec>& bootstrap) {
  if (n_outer < 2 || n_inner < 2) throw ParameterError("vorobev_index needs n_outer, n_inner >= 2");
  validate(levels);
  const auto& space = model.inputs();
  if (i >= space.size()) throw ParameterError("vorobev_index: input index out of range");

  std::vector<SetSample> outer(n_outer), medians(n_outer);
  parallel_for(n_outer, [&](std::size_t j) {
    Rng draw(derive_seed(seed, {i, j, 0}));
    const double ui = space.distribution(i).inverse_cdf(draw.uniform());
    const auto sets = inner_sets(model, levels, i, ui, n_inner, derive_seed(seed, {i, j, 1}));
    outer[j] = sets.front();
    medians[j] = vorobev_quantile(coverage(sets), 0.5);
  });

  const SetSample median = vorobev_quantile(coverage(outer), 0.5);
  std::vector<std::size_t> num(n_outer), den(n_outer);
  std::size_t num_total = 0, den_total = 0;
  for (std::size_t j = 0; j < n_outer; ++j) {
    num[j] = symdiff_count(outer[j], medians[j]);
    den[j] = symdiff_count(outer[j], median);
    num_total += num[j];
    den_total += den[j];
  }
  if (den_total == 0) throw DegenerateError("vorobev_index: the output set is deterministic (zero median deviation)");

  VorobevEstimate e;
  e.input = space.dim(i).name;
  e.estimate = 1.0 - static_cast<double>(num_total) / static_cast<double>(den_total);
  e.n_outer = n_outer;
  e.n_inner = n_inner;
  const double m = static_cast<double>(outer.front().grid().cells()) * static_cast<double>(n_outer);
  e.vmd = static_cast<double>(den_total) / m;
  e.conditional_deviation = static_cast<double>(num_total) / m;
  e.evaluations = n_outer * n_inner;
  e.seed = seed;

  if (bootstrap) {
    // Outer draws are resampled; the conditional medians stay paired with
    // their outer set, the unconditional median is recomputed.
    auto statistic = [&](std::span<const std::size_t> idx) {
      std::vector<SetSample> resampled;
      resampled.reserve(idx.size());
      for (auto j : idx) resampled.push_back(outer[j]);
      const SetSample q = vorobev_quantile(coverage(resampled), 0.5);
      std::size_t a = 0, b = 0;
      for (auto j : idx) {
        a += num[j];
        b += symdiff_count(outer[j], q);
      }
      if (b == 0) throw DegenerateError("zero deviation in bootstrap replicate");
      return 1.0 - static_cast<double>(a) / static_cast<double>(b);
    };
    const auto ci = bootstrap_ci(statistic, n_outer, *bootstrap);
    e.ci_lo = ci.lo;
    e.ci_hi = ci.hi;
    e.has_ci = true;
    e.B = bootstrap->B;
  }
  return e;
}

}  // namespace mapgsa
