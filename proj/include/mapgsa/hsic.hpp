#pragma once

#include "mapgsa/resample.hpp"
#include "mapgsa/sampling.hpp"
#include "mapgsa/setgrid.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mapgsa {

enum class KernelKind { sobolev1, gaussian, laplace, matern32, matern52 };

std::string to_string(KernelKind kind);
KernelKind parse_kernel_kind(const std::string& name);

/// Input kernel on [0,1]; `bandwidth` is sigma for gaussian and h otherwise.
struct InputKernelSpec {
  KernelKind kind = KernelKind::sobolev1;
  double bandwidth = 0.2;
  std::size_t quadrature_order = 64;
};

/// Kernel formula before any transform: the full Sobolev kernel of order 1,
///   1 + (x - 1/2)(y - 1/2) + [(x - y)^2 - |x - y| + 1/6] / 2,
/// or the base gaussian / laplace / Matern kernel. Throws DomainError for
/// x, y outside [0, 1] and ParameterError for a non-positive bandwidth.
double input_kernel(const InputKernelSpec& spec, double x, double y);

/// Gauss-Legendre nodes and weights on [0, 1].
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};
Quadrature gauss_legendre_unit(std::size_t order);

/// ANOVA input kernel K = 1 + k0 where k0 has zero mean under the uniform
/// measure on [0,1]. For a base kernel k:
///   K(x, y) = 1 + k(x, y) - m(x) - m(y) + mu,  m(x) = int k(x, z) dz,  mu = int m,
/// with both integrals by Gauss-Legendre quadrature. The Sobolev kernel is
/// already of this form and is used as is.
class AnovaKernel {
 public:
  using Base = std::function<double(double, double)>;

  AnovaKernel() = default;
  /// Transform of `base` with quadrature of the given order.
  AnovaKernel(Base base, std::size_t order);

  double operator()(double x, double y) const { return 1.0 + centered(x, y); }
  /// K(x, y) - 1.
  double centered(double x, double y) const;
  /// m(x); 0 for kernels used untransformed.
  double embedding(double x) const;
  double total_mean() const noexcept { return mu_; }
  bool transformed() const noexcept { return transformed_; }

  /// Matrix of K(x_j, x_l) - 1, with m(x_j) computed once per point.
  Eigen::MatrixXd centered_gram(std::span<const double> x) const;

 private:
  friend AnovaKernel make_input_kernel(const InputKernelSpec& spec);
  Base base_;
  Quadrature quad_;
  double mu_ = 0.0;
  bool transformed_ = false;
};

AnovaKernel anova_transform(AnovaKernel::Base base, std::size_t order = 64);
/// ANOVA kernel for a spec: Sobolev as is, the others through anova_transform.
AnovaKernel make_input_kernel(const InputKernelSpec& spec);

/// exp(-vol(a Delta b) / (2 sigma2)); throws ParameterError when sigma2 <= 0.
double set_kernel(const SetSample& a, const SetSample& b, double sigma2);

/// Symmetric matrix of pairwise symmetric-difference volumes.
Eigen::MatrixXd pairwise_symdiff(std::span<const SetSample> sets);

/// Lower median (order statistic ceil(N/2) of the N = n(n-1)/2 pairs) of the
/// pairwise symmetric-difference volumes. Throws DegenerateError when it is 0.
double median_bandwidth(std::span<const SetSample> sets);
double median_bandwidth(const Eigen::MatrixXd& symdiff);

/// 2 / (n (n - 1)) sum_{j<l} A(j, l) L(j, l).
double hsic_ustat(const Eigen::MatrixXd& A, const Eigen::MatrixXd& L);

/// Input columns of `unit_inputs` must already lie in [0, 1]
/// (see InputSpace::rescale_to_unit).
double hsic_set(std::size_t i, const Matrix& unit_inputs, std::span<const SetSample> sets,
                const InputKernelSpec& kernel, double sigma2);
double hsic_total(const Matrix& unit_inputs, std::span<const SetSample> sets,
                  const std::vector<InputKernelSpec>& kernels, double sigma2);

enum class PValueMethod { gamma, permutation };

std::string to_string(PValueMethod method);
PValueMethod parse_pvalue_method(const std::string& name);

struct HsicEstimate {
  std::string input;
  double hsic = 0.0;
  double hsic_total = 0.0;
  double index = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool has_ci = false;
  double pvalue = 1.0;
  /// Spread of the p-value induced by bootstrapping the test statistic.
  double pvalue_sd = 0.0;
  double sigma2 = 0.0;
  std::size_t n = 0;
  std::string kernel;
};

/// Precomputed Gram matrices for all HSIC quantities of one sample.
class HsicAnalysis {
 public:
  /// `kernels` holds one spec for all inputs or one per input; sigma2 defaults
  /// to the median bandwidth.
  HsicAnalysis(const Matrix& unit_inputs, std::span<const SetSample> sets, std::vector<InputKernelSpec> kernels,
               std::optional<double> sigma2 = std::nullopt);

  std::size_t n() const noexcept { return n_; }
  std::size_t p() const noexcept { return centered_.size(); }
  double sigma2() const noexcept { return sigma2_; }
  const Eigen::MatrixXd& set_gram() const noexcept { return L_; }
  const Eigen::MatrixXd& centered_gram(std::size_t i) const { return centered_.at(i); }
  /// prod_i (1 + A_i) - 1, the centered Gram of the full input vector.
  const Eigen::MatrixXd& total_gram() const noexcept { return total_; }

  double hsic(std::size_t i) const;
  double hsic_total() const;
  /// hsic(i) / hsic_total(); throws DegenerateError when hsic_total() <= 0.
  double index(std::size_t i) const;

  /// permutation: (1 + #{H_b >= H_obs}) / (1 + B_perm) over permutations of
  /// input column i. gamma: two-parameter gamma fitted by moments to the
  /// permutation null of n * V, V the biased (V-statistic) form, which is an
  /// increasing affine function of the U-statistic under permutations; upper tail at
  /// the observed value. Needs n >= 10, and B_perm >= 20 for gamma.
  double pvalue(std::size_t i, PValueMethod method, std::size_t B_perm, std::uint64_t seed) const;

  HsicEstimate estimate(std::size_t i, const std::optional<BootstrapSpec>& bootstrap, PValueMethod method,
                        std::size_t B_perm, std::uint64_t seed) const;

 private:
  struct GammaFit {
    double shape = 0.0;
    double scale = 0.0;
  };
  GammaFit fit_null(std::size_t i, std::size_t B_perm, std::uint64_t seed, std::vector<double>* null_u) const;
  double v_statistic(std::size_t i) const;

  std::size_t n_ = 0;
  double sigma2_ = 0.0;
  Eigen::MatrixXd L_;
  std::vector<Eigen::MatrixXd> centered_;
  Eigen::MatrixXd total_;
  std::vector<std::string> kernel_names_;
};

/// Index of input i with bootstrap CI (with-replacement resamples of sample
/// indices, U-statistics recomputed on each resample).
HsicEstimate s_hsic(std::size_t i, const Matrix& unit_inputs, std::span<const SetSample> sets,
                    const std::vector<InputKernelSpec>& kernels, std::optional<double> sigma2,
                    const std::optional<BootstrapSpec>& bootstrap);

double independence_pvalue(std::size_t i, const Matrix& unit_inputs, std::span<const SetSample> sets,
                           const InputKernelSpec& kernel, double sigma2, PValueMethod method, std::size_t B_perm,
                           std::uint64_t seed = 0);

}  // namespace mapgsa
