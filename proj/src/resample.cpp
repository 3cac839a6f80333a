#include "mapgsa/resample.hpp"

#include "mapgsa/errors.hpp"
#include "mapgsa/parallel.hpp"
#include "mapgsa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace mapgsa {

std::string to_string(BootstrapMode mode) {
  return mode == BootstrapMode::with_replacement ? "with-replacement" : "subsample";
}

BootstrapMode parse_bootstrap_mode(const std::string& name) {
  if (name == "with-replacement") return BootstrapMode::with_replacement;
  if (name == "subsample") return BootstrapMode::subsample;
  throw ParameterError("unknown bootstrap mode '" + name + "'");
}

void validate(const BootstrapSpec& spec) {
  if (spec.B < 2) throw ParameterError("bootstrap needs B >= 2");
  if (!(spec.fraction > 0.0 && spec.fraction <= 1.0)) throw ParameterError("bootstrap fraction must lie in (0, 1]");
  if (!(spec.level > 0.0 && spec.level < 1.0)) throw ParameterError("bootstrap level must lie in (0, 1)");
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw ParameterError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  const auto k = static_cast<std::size_t>(std::floor(h));
  if (k + 1 >= values.size()) return values.back();
  return values[k] + (h - static_cast<double>(k)) * (values[k + 1] - values[k]);
}

std::vector<std::size_t> multiplicities(std::span<const std::size_t> indices, std::size_t n) {
  std::vector<std::size_t> counts(n, 0);
  for (auto j : indices) ++counts.at(j);
  return counts;
}

BootstrapResult bootstrap_ci(const IndexStatistic& statistic, std::size_t n, const BootstrapSpec& spec) {
  validate(spec);
  if (n < 1) throw ParameterError("bootstrap needs n >= 1");

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  BootstrapResult result;
  result.estimate = statistic(all);

  const bool subsample = spec.mode == BootstrapMode::subsample;
  const std::size_t size =
      subsample ? std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(spec.fraction * static_cast<double>(n) + 1e-9)))
                : n;

  std::vector<std::optional<double>> slots(spec.B);
  parallel_for(spec.B, [&](std::size_t b) {
    Rng rng(derive_seed(spec.seed, {b}));
    std::vector<std::size_t> idx;
    if (subsample) {
      idx = all;
      // Partial Fisher-Yates: the first `size` entries are a uniform subset.
      for (std::size_t k = 0; k < size; ++k) std::swap(idx[k], idx[k + rng.below(n - k)]);
      idx.resize(size);
    } else {
      idx.resize(n);
      for (auto& j : idx) j = rng.below(n);
    }
    std::sort(idx.begin(), idx.end());
    try {
      const double v = statistic(idx);
      if (std::isfinite(v)) slots[b] = v;
    } catch (const std::exception&) {
    }
  });

  for (const auto& s : slots) {
    if (s) result.replicates.push_back(*s); else ++result.dropped;
  }
  if (10 * result.dropped > spec.B) {
    throw DegenerateError("bootstrap: " + std::to_string(result.dropped) + " of " + std::to_string(spec.B) +
                          " replicates failed");
  }

  const double tail = 0.5 * (1.0 - spec.level);
  if (subsample) {
    std::vector<double> centered(result.replicates.size());
    for (std::size_t k = 0; k < centered.size(); ++k) centered[k] = result.replicates[k] - result.estimate;
    const double scale = spec.correction ? std::sqrt(spec.fraction) : 1.0;
    result.lo = result.estimate + scale * quantile(centered, tail);
    result.hi = result.estimate + scale * quantile(centered, 1.0 - tail);
  } else {
    result.lo = quantile(result.replicates, tail);
    result.hi = quantile(result.replicates, 1.0 - tail);
  }
  return result;
}

}  // namespace mapgsa
