#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mapgsa {

/// Row-major dense matrix; rows are samples, columns are inputs.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class DistKind { uniform, truncated_normal, truncated_skew_normal };

std::string to_string(DistKind kind);
DistKind parse_dist_kind(const std::string& name);

/// A one-dimensional input law restricted to [lo, hi].
///
/// truncated_normal uses (mu, sigma); truncated_skew_normal uses
/// (xi, omega, alpha) with density 2/omega * phi(z) * Phi(alpha z),
/// z = (x - xi) / omega. Unused parameters are ignored.
struct DistributionSpec {
  DistKind kind = DistKind::uniform;
  double lo = 0.0;
  double hi = 1.0;
  double mu = 0.0;
  double sigma = 1.0;
  double xi = 0.0;
  double omega = 1.0;
  double alpha = 0.0;

  static DistributionSpec uniform(double lo, double hi);
  static DistributionSpec truncated_normal(double mu, double sigma, double lo, double hi);
  static DistributionSpec truncated_skew_normal(double xi, double omega, double alpha, double lo, double hi);
};

/// Throws ParameterError when the spec is invalid (lo >= hi, sigma <= 0,
/// omega <= 0, non-finite values, or no probability mass inside the bounds).
void validate(const DistributionSpec& spec);

/// A validated distribution with a precomputed CDF table.
///
/// Non-uniform laws share one code path: the truncated density is integrated
/// panel by panel with adaptive Gauss-Kronrod quadrature, and the inverse CDF
/// is found by safeguarded Newton iteration inside the matching panel.
class Distribution {
 public:
  explicit Distribution(const DistributionSpec& spec);

  const DistributionSpec& spec() const noexcept { return spec_; }
  double lo() const noexcept { return spec_.lo; }
  double hi() const noexcept { return spec_.hi; }

  /// Density of the truncated law (normalized over [lo, hi]).
  double pdf(double x) const;
  double cdf(double x) const;
  /// F^-1(u) for u in [0, 1]; monotone and always inside [lo, hi].
  double inverse_cdf(double u) const;

 private:
  double raw_density(double x) const;
  double integrate(double a, double b, unsigned depth) const;

  DistributionSpec spec_;
  double mass_ = 1.0;
  std::vector<double> edges_;
  std::vector<double> cumulative_;
};

double inverse_cdf(const DistributionSpec& dist, double u);

/// n i.i.d. draws by inversion; deterministic for a given seed.
std::vector<double> sample(const DistributionSpec& dist, std::size_t n, std::uint64_t seed);

struct InputDim {
  std::string name;
  DistributionSpec dist;
};

/// Ordered list of independent named inputs.
class InputSpace {
 public:
  InputSpace() = default;
  explicit InputSpace(std::vector<InputDim> dims);

  std::size_t size() const noexcept { return dims_.size(); }
  const InputDim& dim(std::size_t i) const { return dims_.at(i); }
  const std::vector<InputDim>& dims() const noexcept { return dims_; }
  const Distribution& distribution(std::size_t i) const { return *dists_.at(i); }
  std::size_t index_of(const std::string& name) const;

  /// True when every coordinate of u lies inside its bounds.
  bool contains(std::span<const double> u) const;

  /// Maps a matrix of [0,1] probabilities through each column's inverse CDF.
  Matrix transform(const Matrix& unit) const;

  /// Affine map of each column from [lo, hi] to [0, 1].
  Matrix rescale_to_unit(const Matrix& values) const;

 private:
  std::vector<InputDim> dims_;
  std::vector<std::shared_ptr<const Distribution>> dists_;
};

/// i.i.d. Monte Carlo design (n x p) drawn column by column.
Matrix monte_carlo(const InputSpace& space, std::size_t n, std::uint64_t seed);

/// Halton points in [0,1]^dim; row k is the radical inverse of index
/// skip + k + 1 in the bases given by the first `dim` primes.
Matrix halton(std::size_t dim, std::size_t n, std::size_t skip = 0);

/// Radical inverse of `index` in `base`.
double radical_inverse(std::uint64_t index, unsigned base);

/// First `count` primes.
std::vector<unsigned> first_primes(std::size_t count);

/// Latin hypercube design: one point in each of the n equiprobable strata of
/// every input, mapped through the inverse CDF.
Matrix lhs(const InputSpace& space, std::size_t n, std::uint64_t seed);

enum class DesignGenerator { mc, halton };

std::string to_string(DesignGenerator gen);
DesignGenerator parse_generator(const std::string& name);

/// Pick-and-freeze sample pair (U, U') for first-order Sobol' estimation.
struct PickFreezeDesign {
  Matrix U;
  Matrix Uprime;

  std::size_t n() const noexcept { return static_cast<std::size_t>(U.rows()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(U.cols()); }

  /// U with column i replaced by column i of U'.
  Matrix substituted(std::size_t i) const;
  /// Row j of substituted(i), without materializing the matrix.
  std::vector<double> substituted_row(std::size_t i, std::size_t j) const;

  /// Model evaluations consumed by the estimator: n (p + 2).
  std::size_t evaluations() const noexcept { return n() * (p() + 2); }
};

/// With the halton generator, U uses the first p Halton dimensions and U'
/// dimensions p+1..2p of the same sequence; with mc both are i.i.d. draws.
PickFreezeDesign pick_freeze(const InputSpace& space, std::size_t n, std::uint64_t seed,
                             DesignGenerator generator);

}  // namespace mapgsa
