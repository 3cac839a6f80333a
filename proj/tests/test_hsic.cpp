#include "helpers.hpp"

#include "mapgsa/errors.hpp"
#include "mapgsa/hsic.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace mapgsa;
using testing::square_grid;

namespace {

const KernelKind kAllKernels[] = {KernelKind::sobolev1, KernelKind::gaussian, KernelKind::laplace,
                                  KernelKind::matern32, KernelKind::matern52};

struct Sample {
  Matrix unit;
  std::vector<SetSample> sets;
};

/// Three uniform inputs: u1 moves the level, u2 tilts the map weakly, u3 is ignored.
Sample screening_sample(std::size_t n, std::uint64_t seed) {
  SeparableParams params;
  params.terms = {{0, testing::constant(1.0), LinkKind::identity}, {1, {BasisKind::x1, 0.5}, LinkKind::identity}};
  const auto model = make_synthetic(ModelKind::synthetic_separable, params, testing::unit_inputs(3), square_grid(8, 8));
  Sample s;
  const Matrix u = monte_carlo(model->inputs(), n, seed);
  s.unit = model->inputs().rescale_to_unit(u);
  s.sets = lift_all(*model, LevelGrid{-0.1, 1.6, 16}, u);
  return s;
}

/// Integral over [0, 1] of f, split at a kink point, by Gauss-Kronrod.
template <class F>
double integrate_split(F f, double kink) {
  using boost::math::quadrature::gauss_kronrod;
  double total = 0.0;
  if (kink > 0) total += gauss_kronrod<double, 61>::integrate(f, 0.0, kink, 12, 1e-13);
  if (kink < 1) total += gauss_kronrod<double, 61>::integrate(f, kink, 1.0, 12, 1e-13);
  return total;
}

}  // namespace

TEST_CASE("Sobolev kernel by hand") {
  const InputKernelSpec sob{KernelKind::sobolev1};
  CHECK(input_kernel(sob, 0.0, 0.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  for (double x : {0.0, 0.2, 0.5, 0.9}) {
    CHECK(input_kernel(sob, x, x) == doctest::Approx(1.0 + (x - 0.5) * (x - 0.5) + 1.0 / 12.0).epsilon(1e-15));
  }
  CHECK(input_kernel(sob, 0.1, 0.7) == doctest::Approx(input_kernel(sob, 0.7, 0.1)));
  CHECK_THROWS_AS(input_kernel(sob, -0.1, 0.5), DomainError);
}

TEST_CASE("base kernels on the diagonal and by hand") {
  for (auto kind : {KernelKind::gaussian, KernelKind::laplace, KernelKind::matern32, KernelKind::matern52}) {
    CHECK(input_kernel({kind, 0.3}, 0.4, 0.4) == 1.0);
  }
  const double r = 0.3, h = 0.2;
  CHECK(input_kernel({KernelKind::gaussian, h}, 0.1, 0.4) == doctest::Approx(std::exp(-r * r / (2 * h * h))));
  CHECK(input_kernel({KernelKind::laplace, h}, 0.1, 0.4) == doctest::Approx(std::exp(-r / h)));
  const double s3 = std::sqrt(3.0) * r / h, s5 = std::sqrt(5.0) * r / h;
  CHECK(input_kernel({KernelKind::matern32, h}, 0.1, 0.4) == doctest::Approx((1 + s3) * std::exp(-s3)));
  CHECK(input_kernel({KernelKind::matern52, h}, 0.1, 0.4) ==
        doctest::Approx((1 + s5 + s5 * s5 / 3) * std::exp(-s5)));
  CHECK_THROWS_AS(input_kernel({KernelKind::gaussian, 0.0}, 0.1, 0.2), ParameterError);
  CHECK(parse_kernel_kind(to_string(KernelKind::matern52)) == KernelKind::matern52);
}

TEST_CASE("Gauss-Legendre rule on the unit interval") {
  const auto q = gauss_legendre_unit(16);
  REQUIRE(q.nodes.size() == 16);
  CHECK(std::accumulate(q.weights.begin(), q.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::is_sorted(q.nodes.begin(), q.nodes.end()));
  // exact up to degree 31
  for (int deg : {1, 7, 20, 31}) {
    double s = 0.0;
    for (std::size_t k = 0; k < 16; ++k) s += q.weights[k] * std::pow(q.nodes[k], deg);
    CHECK(s == doctest::Approx(1.0 / (deg + 1)).epsilon(1e-13));
  }
}

TEST_CASE("centering removes a constant kernel") {
  const AnovaKernel k = anova_transform([](double, double) { return 3.5; }, 32);
  CHECK(k.transformed());
  for (double x : {0.0, 0.4, 1.0}) {
    for (double y : {0.1, 0.9}) CHECK(std::abs(k(x, y) - 1.0) <= 1e-14);
  }
}

TEST_CASE("every input kernel has zero mean against the uniform measure") {
  Rng rng(21);
  std::vector<double> ys{0.0, 0.3, 0.7, 1.0};
  for (int k = 0; k < 10; ++k) ys.push_back(rng.uniform());
  for (auto kind : kAllKernels) {
    CAPTURE(to_string(kind));
    const AnovaKernel K = make_input_kernel({kind, 0.2});
    CHECK(K.transformed() == (kind != KernelKind::sobolev1));
    for (double y : ys) {
      const double integral = integrate_split([&](double x) { return K(x, y) - 1.0; }, y);
      CHECK(std::abs(integral) <= 1e-3);
    }
  }
}

TEST_CASE("centered Gram agrees with pointwise evaluation") {
  const AnovaKernel K = make_input_kernel({KernelKind::laplace, 0.15});
  const std::vector<double> x{0.0, 0.13, 0.5, 0.77, 1.0};
  const Eigen::MatrixXd G = K.centered_gram(x);
  for (std::size_t a = 0; a < x.size(); ++a) {
    for (std::size_t b = 0; b < x.size(); ++b) {
      CHECK(G(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) == doctest::Approx(K.centered(x[a], x[b])).epsilon(1e-13));
    }
  }
}

TEST_CASE("set kernel values") {
  const SetGrid g{3, 3, 4};
  CHECK(set_kernel(SetSample::empty(g), SetSample::full(g), 0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  Rng rng(4);
  const SetSample a = testing::random_mask(g, rng), b = testing::random_hypograph(g, rng);
  CHECK(set_kernel(a, a, 0.1) == 1.0);
  CHECK(set_kernel(a, b, 0.1) == set_kernel(b, a, 0.1));
  CHECK(set_kernel(a, b, 0.1) > 0.0);
  CHECK(set_kernel(a, b, 0.1) == doctest::Approx(std::exp(-symdiff_volume(a, b) / 0.2)));
  CHECK_THROWS_AS(set_kernel(a, b, 0.0), ParameterError);
}

TEST_CASE("median bandwidth") {
  const SetGrid g{4, 4, 8};
  Rng rng(12);
  std::vector<SetSample> sets;
  for (int k = 0; k < 10; ++k) sets.push_back(testing::random_hypograph(g, rng));
  std::vector<double> pairs;
  for (std::size_t j = 0; j < 10; ++j) {
    for (std::size_t l = j + 1; l < 10; ++l) pairs.push_back(symdiff_volume(sets[j], sets[l]));
  }
  REQUIRE(pairs.size() == 45);
  std::sort(pairs.begin(), pairs.end());
  CHECK(median_bandwidth(sets) == pairs[22]);  // the 23rd of 45

  // even pair count: 4 sets give 6 pairs, lower median is the 3rd
  const std::vector<SetSample> four(sets.begin(), sets.begin() + 4);
  std::vector<double> six;
  for (std::size_t j = 0; j < 4; ++j) {
    for (std::size_t l = j + 1; l < 4; ++l) six.push_back(symdiff_volume(four[j], four[l]));
  }
  std::sort(six.begin(), six.end());
  CHECK(median_bandwidth(four) == six[2]);

  const std::vector<SetSample> two(sets.begin(), sets.begin() + 2);
  CHECK(median_bandwidth(two) == symdiff_volume(sets[0], sets[1]));
  const std::vector<SetSample> same(5, sets[3]);
  CHECK_THROWS_AS(median_bandwidth(same), DegenerateError);
}

TEST_CASE("three-point U-statistic transcription") {
  Eigen::MatrixXd A(3, 3), L(3, 3);
  A << 9, 0.5, -0.2, 0.5, 9, 0.1, -0.2, 0.1, 9;
  L << 1, 0.8, 0.3, 0.8, 1, 0.6, 0.3, 0.6, 1;
  const double expected = (2.0 / 6.0) * (0.5 * 0.8 + (-0.2) * 0.3 + 0.1 * 0.6);
  CHECK(hsic_ustat(A, L) == doctest::Approx(expected).epsilon(1e-14));

  // the same from data, with kernels evaluated straight from their formulas
  const SetGrid g{2, 2, 4};
  Rng rng(3);
  std::vector<SetSample> sets;
  for (int k = 0; k < 3; ++k) sets.push_back(testing::random_hypograph(g, rng));
  Matrix u(3, 1);
  u << 0.1, 0.6, 0.95;
  const double sigma2 = 0.3;
  double sum = 0.0;
  for (int j = 0; j < 3; ++j) {
    for (int l = j + 1; l < 3; ++l) {
      const double kin = input_kernel({KernelKind::sobolev1}, u(j, 0), u(l, 0)) - 1.0;
      sum += kin * std::exp(-symdiff_volume(sets[j], sets[l]) / (2 * sigma2));
    }
  }
  CHECK(std::abs(hsic_set(0, u, sets, {KernelKind::sobolev1}, sigma2) - sum / 3.0) <= 1e-12);
}

TEST_CASE("a single input is its own total") {
  const Sample s = screening_sample(60, 2);
  const Matrix one = s.unit.leftCols(1);
  const double sigma2 = median_bandwidth(s.sets);
  for (auto kind : kAllKernels) {
    const InputKernelSpec spec{kind, 0.2};
    CHECK(hsic_total(one, s.sets, {spec}, sigma2) == doctest::Approx(hsic_set(0, one, s.sets, spec, sigma2)).epsilon(1e-12));
    const HsicAnalysis analysis(one, s.sets, {spec});
    CHECK(analysis.index(0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("pairing-preserving permutations and cell relabeling leave HSIC unchanged") {
  const Sample s = screening_sample(80, 5);
  const double sigma2 = 0.05;
  const double base = hsic_set(0, s.unit, s.sets, {KernelKind::sobolev1}, sigma2);

  std::vector<std::size_t> perm(80);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(6);
  rng.shuffle(std::span(perm));
  Matrix pu(80, 3);
  std::vector<SetSample> ps;
  for (std::size_t k = 0; k < 80; ++k) {
    pu.row(static_cast<Eigen::Index>(k)) = s.unit.row(static_cast<Eigen::Index>(perm[k]));
    ps.push_back(s.sets[perm[k]]);
  }
  CHECK(hsic_set(0, pu, ps, {KernelKind::sobolev1}, sigma2) == doctest::Approx(base).epsilon(1e-12));

  // one fixed bijection of lattice cells applied to every set
  const SetGrid g = s.sets.front().grid();
  std::vector<std::size_t> cells(g.cells());
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  rng.shuffle(std::span(cells));
  std::vector<SetSample> relabeled;
  for (const auto& set : s.sets) {
    const PackedMask m = set.to_mask();
    PackedMask out(g.cells());
    for (std::size_t c = 0; c < g.cells(); ++c) out.set(cells[c], m.test(c));
    relabeled.push_back(SetSample::from_mask(g, out));
  }
  CHECK(hsic_set(0, s.unit, relabeled, {KernelKind::sobolev1}, sigma2) == base);
}

TEST_CASE("identical output sets give a near-zero statistic") {
  const Sample s = screening_sample(1000, 8);
  const std::vector<SetSample> same(1000, s.sets[0]);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(hsic_set(i, s.unit, same, {KernelKind::sobolev1}, 0.1)) <= 0.05);
}

TEST_CASE("screening at n = 1000 for every kernel") {
  const Sample s = screening_sample(1000, 1);
  for (auto kind : kAllKernels) {
    CAPTURE(to_string(kind));
    const HsicAnalysis analysis(s.unit, s.sets, {{kind, 0.2}});
    CHECK(analysis.pvalue(0, PValueMethod::gamma, 200, 1) < 0.01);
    CHECK(analysis.pvalue(1, PValueMethod::gamma, 200, 1) < 0.05);
    CHECK(analysis.pvalue(2, PValueMethod::gamma, 200, 1) > 0.05);
    CHECK(analysis.pvalue(0, PValueMethod::permutation, 199, 1) == doctest::Approx(1.0 / 200));
    CHECK(std::abs(analysis.index(2)) <= 0.05);
    CHECK(analysis.index(0) > analysis.index(1));
    CHECK(analysis.hsic_total() >= std::max({analysis.hsic(0), analysis.hsic(1), analysis.hsic(2)}));
  }
}

TEST_CASE("null statistic against the permutation spread") {
  const Sample s = screening_sample(300, 14);
  const HsicAnalysis analysis(s.unit, s.sets, {{KernelKind::sobolev1}});
  // spread of the statistic over column permutations of the ignored input
  Rng rng(2);
  std::vector<double> null;
  Matrix shuffled = s.unit;
  std::vector<std::size_t> idx(300);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (int b = 0; b < 200; ++b) {
    rng.shuffle(std::span(idx));
    for (std::size_t k = 0; k < 300; ++k) shuffled(static_cast<Eigen::Index>(k), 2) = s.unit(static_cast<Eigen::Index>(idx[k]), 2);
    null.push_back(hsic_set(2, shuffled, s.sets, {KernelKind::sobolev1}, analysis.sigma2()));
  }
  double mean = 0, sq = 0;
  for (double v : null) mean += v / null.size();
  for (double v : null) sq += (v - mean) * (v - mean) / (null.size() - 1);
  // the permutation null is centered at mean(A) mean(L) over off-diagonal pairs, not at 0
  CHECK(std::abs(analysis.hsic(2) - mean) <= 3.0 * std::sqrt(sq));
}

TEST_CASE("permutation p-values live on the 1/(B+1) grid") {
  const Sample s = screening_sample(40, 3);
  const HsicAnalysis analysis(s.unit, s.sets, {{KernelKind::sobolev1}});
  for (std::size_t i = 0; i < 3; ++i) {
    const double p = analysis.pvalue(i, PValueMethod::permutation, 199, 9);
    const double scaled = p * 200.0;
    CHECK(std::abs(scaled - std::round(scaled)) <= 1e-9);
    CHECK(p >= 1.0 / 200);
    CHECK(p <= 1.0);
    CHECK(analysis.pvalue(i, PValueMethod::permutation, 199, 9) == p);
  }
  CHECK_THROWS_AS(analysis.pvalue(0, PValueMethod::gamma, 10, 1), ParameterError);
  const Sample tiny = screening_sample(8, 3);
  const HsicAnalysis small(tiny.unit, tiny.sets, {{KernelKind::sobolev1}});
  CHECK_THROWS_AS(small.pvalue(0, PValueMethod::permutation, 50, 1), ParameterError);
}

TEST_CASE("bootstrap interval of the index") {
  const Sample s = screening_sample(200, 10);
  BootstrapSpec spec;
  spec.B = 50;
  spec.seed = 5;
  const auto a = s_hsic(0, s.unit, s.sets, {{KernelKind::sobolev1}}, std::nullopt, spec);
  const auto b = s_hsic(0, s.unit, s.sets, {{KernelKind::sobolev1}}, std::nullopt, spec);
  CHECK(a.has_ci);
  // tied resample pairs bias the ratio, so the percentile interval need not cover the estimate
  CHECK(a.ci_lo < a.ci_hi);
  CHECK(a.ci_hi - a.ci_lo < 0.3);
  CHECK(a.ci_lo == b.ci_lo);
  CHECK(a.ci_hi == b.ci_hi);
  CHECK(a.sigma2 == median_bandwidth(s.sets));
  CHECK(a.n == 200);

  const HsicAnalysis analysis(s.unit, s.sets, {{KernelKind::sobolev1}});
  const auto e = analysis.estimate(2, spec, PValueMethod::gamma, 100, 3);
  CHECK(e.pvalue_sd >= 0.0);
  CHECK(e.pvalue == analysis.pvalue(2, PValueMethod::gamma, 100, 3));
  CHECK(independence_pvalue(2, s.unit, s.sets, {KernelKind::sobolev1}, analysis.sigma2(), PValueMethod::gamma, 100, 3) ==
        doctest::Approx(e.pvalue));
}
