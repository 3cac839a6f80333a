#include "mapgsa/hsic.hpp"

#include "mapgsa/errors.hpp"
#include "mapgsa/parallel.hpp"
#include "mapgsa/rng.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mapgsa {
namespace {

constexpr double kUnitSlack = 1e-12;

void check_unit(double x) {
  if (!(x >= -kUnitSlack && x <= 1.0 + kUnitSlack)) throw DomainError("input kernel argument outside [0, 1]");
}

double sobolev1(double x, double y) {
  const double d = std::abs(x - y);
  return 1.0 + (x - 0.5) * (y - 0.5) + 0.5 * (d * d - d + 1.0 / 6.0);
}

AnovaKernel::Base base_kernel(const InputKernelSpec& spec) {
  const double h = spec.bandwidth;
  switch (spec.kind) {
    case KernelKind::sobolev1: return sobolev1;
    case KernelKind::gaussian:
      return [h](double x, double y) {
        const double z = (x - y) / h;
        return std::exp(-0.5 * z * z);
      };
    case KernelKind::laplace: return [h](double x, double y) { return std::exp(-std::abs(x - y) / h); };
    case KernelKind::matern32:
      return [h](double x, double y) {
        const double r = std::sqrt(3.0) * std::abs(x - y) / h;
        return (1.0 + r) * std::exp(-r);
      };
    case KernelKind::matern52:
      return [h](double x, double y) {
        const double r = std::sqrt(5.0) * std::abs(x - y) / h;
        return (1.0 + r + r * r / 3.0) * std::exp(-r);
      };
  }
  throw ParameterError("unknown kernel kind");
}

void check_spec(const InputKernelSpec& spec) {
  if (spec.kind != KernelKind::sobolev1 && !(spec.bandwidth > 0.0)) throw ParameterError("kernel bandwidth must be positive");
  if (spec.quadrature_order < 2) throw ParameterError("kernel quadrature order must be >= 2");
}

double quad_form(std::span<const std::size_t> counts, const Eigen::MatrixXd& A, const Eigen::MatrixXd& L) {
  const auto n = static_cast<Eigen::Index>(counts.size());
  double total = 0.0;
  for (Eigen::Index l = 0; l < n; ++l) {
    const auto cl = counts[static_cast<std::size_t>(l)];
    if (cl == 0) continue;
    double col = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto cj = counts[static_cast<std::size_t>(j)];
      if (cj != 0) col += static_cast<double>(cj) * A(j, l) * L(j, l);
    }
    total += static_cast<double>(cl) * col;
  }
  return total;
}

/// U-statistic on a resample with index multiplicities `counts`.
double resampled_ustat(std::span<const std::size_t> counts, const Eigen::MatrixXd& A, const Eigen::MatrixXd& L) {
  const double m = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  double diag = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    diag += static_cast<double>(counts[j]) * A(jj, jj) * L(jj, jj);
  }
  return (quad_form(counts, A, L) - diag) / (m * (m - 1.0));
}

}  // namespace

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::sobolev1: return "sobolev1";
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::laplace: return "laplace";
    case KernelKind::matern32: return "matern32";
    case KernelKind::matern52: return "matern52";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(const std::string& name) {
  if (name == "sobolev1") return KernelKind::sobolev1;
  if (name == "gaussian") return KernelKind::gaussian;
  if (name == "laplace") return KernelKind::laplace;
  if (name == "matern32") return KernelKind::matern32;
  if (name == "matern52") return KernelKind::matern52;
  throw ParameterError("unknown input kernel '" + name + "'");
}

double input_kernel(const InputKernelSpec& spec, double x, double y) {
  check_spec(spec);
  check_unit(x);
  check_unit(y);
  return base_kernel(spec)(x, y);
}

Quadrature gauss_legendre_unit(std::size_t order) {
  if (order < 1) throw ParameterError("quadrature order must be >= 1");
  const int n = static_cast<int>(order);
  const auto zeros = boost::math::legendre_p_zeros<double>(n);
  Quadrature q;
  for (double x : zeros) {
    const double dp = boost::math::legendre_p_prime(n, x);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    q.nodes.push_back(0.5 * (1.0 + x));
    q.weights.push_back(0.5 * w);
    if (x != 0.0) {
      q.nodes.push_back(0.5 * (1.0 - x));
      q.weights.push_back(0.5 * w);
    }
  }
  std::vector<std::size_t> order_idx(q.nodes.size());
  std::iota(order_idx.begin(), order_idx.end(), std::size_t{0});
  std::sort(order_idx.begin(), order_idx.end(), [&](std::size_t a, std::size_t b) { return q.nodes[a] < q.nodes[b]; });
  Quadrature sorted;
  for (auto k : order_idx) {
    sorted.nodes.push_back(q.nodes[k]);
    sorted.weights.push_back(q.weights[k]);
  }
  return sorted;
}

AnovaKernel::AnovaKernel(Base base, std::size_t order)
    : base_(std::move(base)), quad_(gauss_legendre_unit(order)), transformed_(true) {
  double mu = 0.0;
  for (std::size_t a = 0; a < quad_.nodes.size(); ++a) mu += quad_.weights[a] * embedding(quad_.nodes[a]);
  mu_ = mu;
}

double AnovaKernel::embedding(double x) const {
  if (!transformed_) return 0.0;
  double m = 0.0;
  for (std::size_t q = 0; q < quad_.nodes.size(); ++q) m += quad_.weights[q] * base_(x, quad_.nodes[q]);
  return m;
}

double AnovaKernel::centered(double x, double y) const {
  if (!transformed_) return base_(x, y) - 1.0;
  return base_(x, y) - embedding(x) - embedding(y) + mu_;
}

Eigen::MatrixXd AnovaKernel::centered_gram(std::span<const double> x) const {
  const auto n = static_cast<Eigen::Index>(x.size());
  for (double v : x) check_unit(v);
  std::vector<double> m(x.size(), 0.0);
  if (transformed_) {
    for (std::size_t j = 0; j < x.size(); ++j) m[j] = embedding(x[j]);
  }
  const double shift = transformed_ ? mu_ : -1.0;
  Eigen::MatrixXd G(n, n);
  for (Eigen::Index l = 0; l < n; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    for (Eigen::Index j = 0; j <= l; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      const double v = base_(x[uj], x[ul]) - m[uj] - m[ul] + shift;
      G(j, l) = v;
      G(l, j) = v;
    }
  }
  return G;
}

AnovaKernel anova_transform(AnovaKernel::Base base, std::size_t order) { return AnovaKernel(std::move(base), order); }

AnovaKernel make_input_kernel(const InputKernelSpec& spec) {
  check_spec(spec);
  if (spec.kind == KernelKind::sobolev1) {
    AnovaKernel k;
    k.base_ = sobolev1;
    k.transformed_ = false;
    return k;
  }
  return AnovaKernel(base_kernel(spec), spec.quadrature_order);
}

double set_kernel(const SetSample& a, const SetSample& b, double sigma2) {
  if (!(sigma2 > 0.0)) throw ParameterError("set kernel bandwidth must be positive");
  return std::exp(-symdiff_volume(a, b) / (2.0 * sigma2));
}

Eigen::MatrixXd pairwise_symdiff(std::span<const SetSample> sets) {
  const std::size_t n = sets.size();
  for (const auto& s : sets) check_same_grid(sets.front().grid(), s.grid());
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  parallel_for(n, [&](std::size_t l) {
    for (std::size_t j = 0; j < l; ++j) D(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) = symdiff_volume(sets[j], sets[l]);
  });
  for (Eigen::Index l = 0; l < D.cols(); ++l) {
    for (Eigen::Index j = 0; j < l; ++j) D(l, j) = D(j, l);
  }
  return D;
}

double median_bandwidth(const Eigen::MatrixXd& symdiff) {
  const auto n = symdiff.rows();
  if (n < 2) throw ParameterError("median bandwidth needs at least two sets");
  std::vector<double> pairs;
  pairs.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index l = 1; l < n; ++l) {
    for (Eigen::Index j = 0; j < l; ++j) pairs.push_back(symdiff(j, l));
  }
  const std::size_t k = (pairs.size() + 1) / 2 - 1;  // ceil(N/2), 1-based
  std::nth_element(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(k), pairs.end());
  const double median = pairs[k];
  if (!(median > 0.0)) throw DegenerateError("median bandwidth is zero: output sets are (almost all) identical");
  return median;
}

double median_bandwidth(std::span<const SetSample> sets) {
  if (sets.size() < 2) throw ParameterError("median bandwidth needs at least two sets");
  return median_bandwidth(pairwise_symdiff(sets));
}

double hsic_ustat(const Eigen::MatrixXd& A, const Eigen::MatrixXd& L) {
  const auto n = A.rows();
  if (n < 2 || A.cols() != n || L.rows() != n || L.cols() != n) throw ParameterError("hsic_ustat: shape mismatch or n < 2");
  double total = 0.0;
  for (Eigen::Index l = 1; l < n; ++l) {
    for (Eigen::Index j = 0; j < l; ++j) total += A(j, l) * L(j, l);
  }
  return 2.0 * total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

namespace {

Eigen::MatrixXd gram_from_symdiff(const Eigen::MatrixXd& D, double sigma2) {
  if (!(sigma2 > 0.0)) throw ParameterError("set kernel bandwidth must be positive");
  return (-D.array() / (2.0 * sigma2)).exp().matrix();
}

std::vector<double> column(const Matrix& m, std::size_t i) {
  if (i >= static_cast<std::size_t>(m.cols())) throw ParameterError("input index out of range");
  const auto c = m.col(static_cast<Eigen::Index>(i));
  return {c.begin(), c.end()};
}

/// Null U-statistics under B_perm permutations of the input sample.
std::vector<double> permutation_null(const Eigen::MatrixXd& A, const Eigen::MatrixXd& L, std::size_t i,
                                     std::size_t B_perm, std::uint64_t seed) {
  const auto n = A.rows();
  const auto un = static_cast<std::size_t>(n);
  std::vector<double> null(B_perm);
  parallel_for(B_perm, [&](std::size_t b) {
    Rng rng(derive_seed(seed, {i, b}));
    std::vector<Eigen::Index> perm(un);
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    rng.shuffle(std::span(perm));
    double total = 0.0;
    for (Eigen::Index l = 1; l < n; ++l) {
      const auto pl = perm[static_cast<std::size_t>(l)];
      for (Eigen::Index j = 0; j < l; ++j) total += A(perm[static_cast<std::size_t>(j)], pl) * L(j, l);
    }
    null[b] = 2.0 * total / (static_cast<double>(n) * static_cast<double>(n - 1));
  });
  return null;
}

}  // namespace

double hsic_set(std::size_t i, const Matrix& unit_inputs, std::span<const SetSample> sets,
                const InputKernelSpec& kernel, double sigma2) {
  if (static_cast<std::size_t>(unit_inputs.rows()) != sets.size()) throw ParameterError("hsic: inputs and sets differ in length");
  if (sets.size() < 2) throw ParameterError("hsic needs n >= 2");
  const auto A = make_input_kernel(kernel).centered_gram(column(unit_inputs, i));
  return hsic_ustat(A, gram_from_symdiff(pairwise_symdiff(sets), sigma2));
}

double hsic_total(const Matrix& unit_inputs, std::span<const SetSample> sets,
                  const std::vector<InputKernelSpec>& kernels, double sigma2) {
  HsicAnalysis analysis(unit_inputs, sets, kernels, sigma2);
  return analysis.hsic_total();
}

std::string to_string(PValueMethod method) { return method == PValueMethod::gamma ? "gamma" : "permutation"; }

PValueMethod parse_pvalue_method(const std::string& name) {
  if (name == "gamma") return PValueMethod::gamma;
  if (name == "permutation") return PValueMethod::permutation;
  throw ParameterError("unknown p-value method '" + name + "'");
}

HsicAnalysis::HsicAnalysis(const Matrix& unit_inputs, std::span<const SetSample> sets,
                           std::vector<InputKernelSpec> kernels, std::optional<double> sigma2)
    : n_(sets.size()) {
  const auto p = static_cast<std::size_t>(unit_inputs.cols());
  if (static_cast<std::size_t>(unit_inputs.rows()) != n_) throw ParameterError("hsic: inputs and sets differ in length");
  if (n_ < 2) throw ParameterError("hsic needs n >= 2");
  if (kernels.size() == 1 && p > 1) kernels.resize(p, kernels.front());
  if (kernels.size() != p) throw ParameterError("hsic: need one kernel spec or one per input");

  const Eigen::MatrixXd D = pairwise_symdiff(sets);
  sigma2_ = sigma2 ? *sigma2 : median_bandwidth(D);
  L_ = gram_from_symdiff(D, sigma2_);

  const auto n = static_cast<Eigen::Index>(n_);
  total_ = Eigen::MatrixXd::Ones(n, n);
  centered_.resize(p);
  for (std::size_t i = 0; i < p; ++i) {
    centered_[i] = make_input_kernel(kernels[i]).centered_gram(column(unit_inputs, i));
    total_.array() *= (centered_[i].array() + 1.0);
    kernel_names_.push_back(to_string(kernels[i].kind));
  }
  total_.array() -= 1.0;
}

double HsicAnalysis::hsic(std::size_t i) const { return hsic_ustat(centered_.at(i), L_); }

double HsicAnalysis::hsic_total() const { return hsic_ustat(total_, L_); }

double HsicAnalysis::index(std::size_t i) const {
  const double total = hsic_total();
  if (!(total > 0.0)) throw DegenerateError("hsic index: non-positive total HSIC");
  return hsic(i) / total;
}

double HsicAnalysis::v_statistic(std::size_t i) const {
  const auto& A = centered_.at(i);
  const double n = static_cast<double>(n_);
  return ((n - 1.0) / n) * hsic(i) + A.trace() / (n * n);
}

HsicAnalysis::GammaFit HsicAnalysis::fit_null(std::size_t i, std::size_t B_perm, std::uint64_t seed,
                                              std::vector<double>* null_u) const {
  const auto& A = centered_.at(i);
  const auto null = permutation_null(A, L_, i, B_perm, seed);
  if (null_u) *null_u = null;

  // n V = (n - 1) U + trace(A) / n for every permutation.
  const double nn = static_cast<double>(n_);
  const double shift = A.trace() / nn;
  double mean = 0.0;
  for (double u : null) mean += (nn - 1.0) * u + shift;
  mean /= static_cast<double>(B_perm);
  double var = 0.0;
  for (double u : null) {
    const double d = (nn - 1.0) * u + shift - mean;
    var += d * d;
  }
  var /= static_cast<double>(B_perm - 1);
  if (!(mean > 0.0) || !(var > 0.0)) throw DegenerateError("hsic p-value: degenerate permutation null");
  return {mean * mean / var, var / mean};
}

double HsicAnalysis::pvalue(std::size_t i, PValueMethod method, std::size_t B_perm, std::uint64_t seed) const {
  if (n_ < 10) throw ParameterError("independence test needs n >= 10");
  if (i >= p()) throw ParameterError("input index out of range");
  if (method == PValueMethod::gamma) {
    if (B_perm < 20) throw ParameterError("gamma p-value needs B_perm >= 20 permutations for the moment fit");
    const auto fit = fit_null(i, B_perm, seed, nullptr);
    const double observed = static_cast<double>(n_) * v_statistic(i);
    return boost::math::gamma_q(fit.shape, std::max(0.0, observed / fit.scale));
  }
  if (B_perm < 1) throw ParameterError("permutation p-value needs B_perm >= 1");
  const auto null = permutation_null(centered_.at(i), L_, i, B_perm, seed);
  const double observed = hsic(i);
  const auto exceed = std::count_if(null.begin(), null.end(), [&](double h) { return h >= observed; });
  return (1.0 + static_cast<double>(exceed)) / (1.0 + static_cast<double>(B_perm));
}

HsicEstimate HsicAnalysis::estimate(std::size_t i, const std::optional<BootstrapSpec>& bootstrap, PValueMethod method,
                                    std::size_t B_perm, std::uint64_t seed) const {
  HsicEstimate e;
  e.hsic = hsic(i);
  e.hsic_total = hsic_total();
  e.index = index(i);
  e.sigma2 = sigma2_;
  e.n = n_;
  e.kernel = kernel_names_.at(i);
  e.pvalue = pvalue(i, method, B_perm, seed);
  if (!bootstrap) return e;

  const auto& A = centered_.at(i);
  auto ratio = [&](std::span<const std::size_t> idx) {
    const auto counts = multiplicities(idx, n_);
    const double total = resampled_ustat(counts, total_, L_);
    if (!(total > 0.0)) throw DegenerateError("non-positive total HSIC in bootstrap replicate");
    return resampled_ustat(counts, A, L_) / total;
  };
  const auto ci = bootstrap_ci(ratio, n_, *bootstrap);
  e.ci_lo = ci.lo;
  e.ci_hi = ci.hi;
  e.has_ci = true;

  // p-value spread: the resampled statistic evaluated against the fixed null.
  std::vector<double> null;
  GammaFit fit;
  if (method == PValueMethod::gamma) fit = fit_null(i, B_perm, seed, &null);
  else null = permutation_null(A, L_, i, B_perm, seed);
  auto pvalue_of = [&](std::span<const std::size_t> idx) {
    const auto counts = multiplicities(idx, n_);
    if (method == PValueMethod::gamma) {
      const double nv = quad_form(counts, A, L_) / static_cast<double>(n_);
      return boost::math::gamma_q(fit.shape, std::max(0.0, nv / fit.scale));
    }
    const double u = resampled_ustat(counts, A, L_);
    const auto exceed = std::count_if(null.begin(), null.end(), [&](double h) { return h >= u; });
    return (1.0 + static_cast<double>(exceed)) / (1.0 + static_cast<double>(null.size()));
  };
  const auto spread = bootstrap_ci(pvalue_of, n_, *bootstrap);
  const auto& reps = spread.replicates;
  const double mean = std::accumulate(reps.begin(), reps.end(), 0.0) / static_cast<double>(reps.size());
  double var = 0.0;
  for (double v : reps) var += (v - mean) * (v - mean);
  e.pvalue_sd = reps.size() > 1 ? std::sqrt(var / static_cast<double>(reps.size() - 1)) : 0.0;
  return e;
}

HsicEstimate s_hsic(std::size_t i, const Matrix& unit_inputs, std::span<const SetSample> sets,
                    const std::vector<InputKernelSpec>& kernels, std::optional<double> sigma2,
                    const std::optional<BootstrapSpec>& bootstrap) {
  HsicAnalysis analysis(unit_inputs, sets, kernels, sigma2);
  HsicEstimate e;
  e.hsic = analysis.hsic(i);
  e.hsic_total = analysis.hsic_total();
  e.index = analysis.index(i);
  e.sigma2 = analysis.sigma2();
  e.n = analysis.n();
  e.kernel = to_string(kernels.front().kind);
  if (bootstrap) {
    const auto& A = analysis.centered_gram(i);
    const auto& total = analysis.total_gram();
    const auto& L = analysis.set_gram();
    auto ratio = [&](std::span<const std::size_t> idx) {
      const auto counts = multiplicities(idx, analysis.n());
      const double t = resampled_ustat(counts, total, L);
      if (!(t > 0.0)) throw DegenerateError("non-positive total HSIC in bootstrap replicate");
      return resampled_ustat(counts, A, L) / t;
    };
    const auto ci = bootstrap_ci(ratio, analysis.n(), *bootstrap);
    e.ci_lo = ci.lo;
    e.ci_hi = ci.hi;
    e.has_ci = true;
  }
  return e;
}

double independence_pvalue(std::size_t i, const Matrix& unit_inputs, std::span<const SetSample> sets,
                           const InputKernelSpec& kernel, double sigma2, PValueMethod method, std::size_t B_perm,
                           std::uint64_t seed) {
  HsicAnalysis analysis(unit_inputs, sets, {kernel}, sigma2);
  return analysis.pvalue(i, method, B_perm, seed);
}

}  // namespace mapgsa
