#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mapgsa {

enum class BootstrapMode { with_replacement, subsample };

std::string to_string(BootstrapMode mode);
BootstrapMode parse_bootstrap_mode(const std::string& name);

struct BootstrapSpec {
  std::size_t B = 100;
  BootstrapMode mode = BootstrapMode::with_replacement;
  /// Subsample size as a fraction of n (subsample mode only).
  double fraction = 0.8;
  /// Scale centered subsample quantiles by sqrt(fraction) (subsample mode only).
  bool correction = true;
  double level = 0.95;
  std::uint64_t seed = 0;
};

void validate(const BootstrapSpec& spec);

/// A statistic evaluated on a multiset (with replacement) or subset of the
/// sample indices {0..n-1}. Index lists are sorted.
using IndexStatistic = std::function<double(std::span<const std::size_t>)>;

struct BootstrapResult {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> replicates;
  std::size_t dropped = 0;
};

/// Percentile interval from B replicates.
///
/// with_replacement: quantiles of the replicates at (1-level)/2 and (1+level)/2.
/// subsample: draws floor(fraction * n) indices without replacement; the
/// interval is estimate + s * q(replicate - estimate), s = sqrt(fraction) when
/// `correction` is set and 1 otherwise. Replicates whose statistic throws are
/// dropped; more than 10% dropped raises DegenerateError.
BootstrapResult bootstrap_ci(const IndexStatistic& statistic, std::size_t n, const BootstrapSpec& spec);

/// Type-7 (linear interpolation) sample quantile; `values` need not be sorted.
double quantile(std::vector<double> values, double prob);

/// Index multiplicities of a resample: counts[j] = occurrences of j.
std::vector<std::size_t> multiplicities(std::span<const std::size_t> indices, std::size_t n);

/// Point estimate with an optional interval and provenance.
struct IndexEstimate {
  std::string input;
  std::string method;
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool has_ci = false;
  std::size_t n = 0;
  std::size_t B = 0;
  std::uint64_t seed = 0;
  std::string extra;
};

}  // namespace mapgsa
