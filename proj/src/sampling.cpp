#include "mapgsa/sampling.hpp"

#include "mapgsa/errors.hpp"
#include "mapgsa/rng.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

namespace mapgsa {
namespace {

constexpr std::size_t kMinPanels = 128;
constexpr std::size_t kMaxPanels = 1 << 16;

bool finite(double x) { return std::isfinite(x); }

}  // namespace

std::string to_string(DistKind kind) {
  switch (kind) {
    case DistKind::uniform: return "uniform";
    case DistKind::truncated_normal: return "truncated-normal";
    case DistKind::truncated_skew_normal: return "truncated-skew-normal";
  }
  return "unknown";
}

DistKind parse_dist_kind(const std::string& name) {
  if (name == "uniform") return DistKind::uniform;
  if (name == "truncated-normal") return DistKind::truncated_normal;
  if (name == "truncated-skew-normal") return DistKind::truncated_skew_normal;
  throw ParameterError("unknown distribution kind '" + name + "'");
}

DistributionSpec DistributionSpec::uniform(double lo, double hi) {
  DistributionSpec s;
  s.kind = DistKind::uniform;
  s.lo = lo;
  s.hi = hi;
  return s;
}

DistributionSpec DistributionSpec::truncated_normal(double mu, double sigma, double lo, double hi) {
  DistributionSpec s;
  s.kind = DistKind::truncated_normal;
  s.mu = mu;
  s.sigma = sigma;
  s.lo = lo;
  s.hi = hi;
  return s;
}

DistributionSpec DistributionSpec::truncated_skew_normal(double xi, double omega, double alpha, double lo,
                                                         double hi) {
  DistributionSpec s;
  s.kind = DistKind::truncated_skew_normal;
  s.xi = xi;
  s.omega = omega;
  s.alpha = alpha;
  s.lo = lo;
  s.hi = hi;
  return s;
}

void validate(const DistributionSpec& spec) {
  if (!finite(spec.lo) || !finite(spec.hi)) throw ParameterError("distribution bounds must be finite");
  if (!(spec.lo < spec.hi)) throw ParameterError("distribution bounds must satisfy lo < hi");
  switch (spec.kind) {
    case DistKind::uniform:
      break;
    case DistKind::truncated_normal:
      if (!finite(spec.mu) || !finite(spec.sigma)) throw ParameterError("truncated-normal parameters must be finite");
      if (!(spec.sigma > 0)) throw ParameterError("truncated-normal requires sigma > 0");
      break;
    case DistKind::truncated_skew_normal:
      if (!finite(spec.xi) || !finite(spec.omega) || !finite(spec.alpha))
        throw ParameterError("truncated-skew-normal parameters must be finite");
      if (!(spec.omega > 0)) throw ParameterError("truncated-skew-normal requires omega > 0");
      break;
  }
}

Distribution::Distribution(const DistributionSpec& spec) : spec_(spec) {
  validate(spec_);
  if (spec_.kind == DistKind::uniform) return;

  // Panels narrow enough that one Gauss-Kronrod rule resolves the density.
  const double width = spec_.hi - spec_.lo;
  const bool skew = spec_.kind == DistKind::truncated_skew_normal;
  const double scale = skew ? spec_.omega / (1.0 + std::abs(spec_.alpha)) : spec_.sigma;
  const double wanted = std::ceil(32.0 * width / scale);
  const std::size_t panels =
      wanted >= static_cast<double>(kMaxPanels) ? kMaxPanels : std::max(kMinPanels, static_cast<std::size_t>(wanted));
  edges_.resize(panels + 1);
  cumulative_.resize(panels + 1);
  for (std::size_t k = 0; k <= panels; ++k) {
    edges_[k] = spec_.lo + width * static_cast<double>(k) / static_cast<double>(panels);
  }
  edges_.back() = spec_.hi;
  cumulative_[0] = 0.0;
  for (std::size_t k = 0; k < panels; ++k) {
    cumulative_[k + 1] = cumulative_[k] + integrate(edges_[k], edges_[k + 1], 8);
  }
  mass_ = cumulative_.back();
  if (!(mass_ > 1e-300) || !finite(mass_)) {
    throw ParameterError("distribution has no probability mass inside [" + std::to_string(spec_.lo) + ", " +
                         std::to_string(spec_.hi) + "]");
  }
}

double Distribution::raw_density(double x) const {
  double loc = spec_.mu, scale = spec_.sigma, shape = 0.0;
  if (spec_.kind == DistKind::truncated_skew_normal) {
    loc = spec_.xi;
    scale = spec_.omega;
    shape = spec_.alpha;
  }
  const double z = (x - loc) / scale;
  const double phi = std::exp(-0.5 * z * z) / (scale * std::sqrt(2.0 * std::numbers::pi));
  // 2 * Phi(shape * z); equals 1 when shape == 0.
  const double skew = std::erfc(-shape * z / std::numbers::sqrt2);
  return phi * skew;
}

double Distribution::integrate(double a, double b, unsigned depth) const {
  if (b <= a) return 0.0;
  auto f = [this](double x) { return raw_density(x); };
  // Tighter tolerances sit below the round-off floor of the error estimate.
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, depth, 1e-12);
}

double Distribution::pdf(double x) const {
  if (x < spec_.lo || x > spec_.hi) return 0.0;
  if (spec_.kind == DistKind::uniform) return 1.0 / (spec_.hi - spec_.lo);
  return raw_density(x) / mass_;
}

double Distribution::cdf(double x) const {
  if (x <= spec_.lo) return 0.0;
  if (x >= spec_.hi) return 1.0;
  if (spec_.kind == DistKind::uniform) return (x - spec_.lo) / (spec_.hi - spec_.lo);
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
  const auto p = static_cast<std::size_t>(std::distance(edges_.begin(), it)) - 1;
  return std::min(1.0, (cumulative_[p] + integrate(edges_[p], x, 0)) / mass_);
}

double Distribution::inverse_cdf(double u) const {
  if (!finite(u)) throw ParameterError("inverse_cdf: probability must be finite");
  if (u < 0.0 || u > 1.0) throw ParameterError("inverse_cdf: probability must lie in [0, 1]");
  if (u == 0.0) return spec_.lo;
  if (u == 1.0) return spec_.hi;
  if (spec_.kind == DistKind::uniform) {
    return std::clamp(spec_.lo + u * (spec_.hi - spec_.lo), spec_.lo, spec_.hi);
  }

  const double target = u * mass_;
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  std::size_t p = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
  p = std::clamp<std::size_t>(p, 1, edges_.size() - 1) - 1;

  const double a = edges_[p];
  double lo = a, hi = edges_[p + 1];
  const double panel_mass = cumulative_[p + 1] - cumulative_[p];
  const double need = target - cumulative_[p];
  double x = panel_mass > 0 ? a + (hi - a) * std::clamp(need / panel_mass, 0.0, 1.0) : 0.5 * (lo + hi);

  const double eps = std::numeric_limits<double>::epsilon();
  const double g_tol = 4 * eps * mass_;
  for (int iter = 0; iter < 60 && hi - lo > 2 * eps * std::max(std::abs(lo), std::abs(hi)); ++iter) {
    const double g = integrate(a, x, 0) - need;
    if (std::abs(g) <= g_tol) break;
    if (g > 0) hi = x; else lo = x;
    const double d = raw_density(x);
    double next = d > 0 ? x - g / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  return std::clamp(x, spec_.lo, spec_.hi);
}

double inverse_cdf(const DistributionSpec& dist, double u) { return Distribution(dist).inverse_cdf(u); }

std::vector<double> sample(const DistributionSpec& dist, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ParameterError("sample: n must be >= 1");
  const Distribution d(dist);
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = d.inverse_cdf(rng.uniform());
  return out;
}

InputSpace::InputSpace(std::vector<InputDim> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw ParameterError("input space needs at least one input");
  std::set<std::string> names;
  for (const auto& d : dims_) {
    if (d.name.empty()) throw ParameterError("input names must be non-empty");
    if (!names.insert(d.name).second) throw ParameterError("duplicate input name '" + d.name + "'");
    dists_.push_back(std::make_shared<const Distribution>(d.dist));
  }
}

std::size_t InputSpace::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i].name == name) return i;
  }
  throw ParameterError("unknown input '" + name + "'");
}

bool InputSpace::contains(std::span<const double> u) const {
  if (u.size() != dims_.size()) return false;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] >= dims_[i].dist.lo && u[i] <= dims_[i].dist.hi)) return false;
  }
  return true;
}

Matrix InputSpace::transform(const Matrix& unit) const {
  if (static_cast<std::size_t>(unit.cols()) != size()) throw ParameterError("transform: column count mismatch");
  Matrix out(unit.rows(), unit.cols());
  for (Eigen::Index c = 0; c < unit.cols(); ++c) {
    const auto& d = *dists_[static_cast<std::size_t>(c)];
    for (Eigen::Index r = 0; r < unit.rows(); ++r) out(r, c) = d.inverse_cdf(unit(r, c));
  }
  return out;
}

Matrix InputSpace::rescale_to_unit(const Matrix& values) const {
  if (static_cast<std::size_t>(values.cols()) != size()) throw ParameterError("rescale: column count mismatch");
  Matrix out(values.rows(), values.cols());
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    const auto& s = dims_[static_cast<std::size_t>(c)].dist;
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
      out(r, c) = std::clamp((values(r, c) - s.lo) / (s.hi - s.lo), 0.0, 1.0);
    }
  }
  return out;
}

Matrix monte_carlo(const InputSpace& space, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ParameterError("monte_carlo: n must be >= 1");
  Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(space.size()));
  for (std::size_t c = 0; c < space.size(); ++c) {
    Rng rng(derive_seed(seed, {c}));
    const auto& d = space.distribution(c);
    for (std::size_t r = 0; r < n; ++r) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = d.inverse_cdf(rng.uniform());
    }
  }
  return out;
}

std::vector<unsigned> first_primes(std::size_t count) {
  std::vector<unsigned> primes;
  for (unsigned candidate = 2; primes.size() < count; ++candidate) {
    bool prime = true;
    for (unsigned p : primes) {
      if (p * p > candidate) break;
      if (candidate % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(candidate);
  }
  return primes;
}

double radical_inverse(std::uint64_t index, unsigned base) {
  double result = 0.0;
  double scale = 1.0 / base;
  while (index > 0) {
    result += static_cast<double>(index % base) * scale;
    index /= base;
    scale /= base;
  }
  return result;
}

Matrix halton(std::size_t dim, std::size_t n, std::size_t skip) {
  if (dim < 1) throw ParameterError("halton: dim must be >= 1");
  const auto bases = first_primes(dim);
  Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t d = 0; d < dim; ++d) {
      out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d)) = radical_inverse(skip + k + 1, bases[d]);
    }
  }
  return out;
}

Matrix lhs(const InputSpace& space, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ParameterError("lhs: n must be >= 1");
  Matrix unit(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(space.size()));
  std::vector<std::size_t> strata(n);
  for (std::size_t c = 0; c < space.size(); ++c) {
    Rng rng(derive_seed(seed, {c}));
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    rng.shuffle(std::span(strata));
    for (std::size_t r = 0; r < n; ++r) {
      const double u = (static_cast<double>(strata[r]) + rng.uniform()) / static_cast<double>(n);
      unit(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = u;
    }
  }
  return space.transform(unit);
}

std::string to_string(DesignGenerator gen) { return gen == DesignGenerator::mc ? "mc" : "halton"; }

DesignGenerator parse_generator(const std::string& name) {
  if (name == "mc") return DesignGenerator::mc;
  if (name == "halton") return DesignGenerator::halton;
  throw ParameterError("unknown design generator '" + name + "'");
}

Matrix PickFreezeDesign::substituted(std::size_t i) const {
  if (i >= p()) throw ParameterError("substituted: input index out of range");
  Matrix out = U;
  out.col(static_cast<Eigen::Index>(i)) = Uprime.col(static_cast<Eigen::Index>(i));
  return out;
}

std::vector<double> PickFreezeDesign::substituted_row(std::size_t i, std::size_t j) const {
  std::vector<double> row(p());
  for (std::size_t c = 0; c < p(); ++c) {
    const auto& src = c == i ? Uprime : U;
    row[c] = src(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c));
  }
  return row;
}

PickFreezeDesign pick_freeze(const InputSpace& space, std::size_t n, std::uint64_t seed, DesignGenerator generator) {
  if (n < 1) throw ParameterError("pick_freeze: n must be >= 1");
  const auto p = static_cast<Eigen::Index>(space.size());
  PickFreezeDesign design;
  if (generator == DesignGenerator::halton) {
    const Matrix points = halton(2 * space.size(), n);
    design.U = space.transform(points.leftCols(p));
    design.Uprime = space.transform(points.rightCols(p));
  } else {
    design.U = monte_carlo(space, n, derive_seed(seed, {0}));
    design.Uprime = monte_carlo(space, n, derive_seed(seed, {1}));
  }
  return design;
}

}  // namespace mapgsa
