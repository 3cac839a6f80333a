#include "helpers.hpp"

#include "mapgsa/errors.hpp"
#include "mapgsa/parallel.hpp"
#include "mapgsa/vorobev.hpp"

#include <doctest.h>

using namespace mapgsa;
using testing::constant;
using testing::sin1;
using testing::square_grid;

namespace {

const LevelGrid kLevels{-0.5, 2.5, 32};

/// Three inputs: u1 shifts the map, u2 tilts it, u3 is ignored.
ModelPtr mixed_model(std::size_t n = 32) {
  SeparableParams params;
  params.terms = {{0, constant(1.0), LinkKind::identity}, {1, {BasisKind::x1, 1.0}, LinkKind::identity}};
  return make_synthetic(ModelKind::synthetic_separable, params, testing::unit_inputs(3), square_grid(n, n));
}

}  // namespace

TEST_CASE("ignored input scores near zero, a sole input near one") {
  SeparableParams params;
  params.terms = {{0, sin1(), LinkKind::identity}};
  const auto model = make_synthetic(ModelKind::synthetic_separable, params, testing::unit_inputs(2), square_grid(32, 32));
  const LevelGrid levels{-1.1, 1.1, 32};
  const auto sole = vorobev_index(*model, levels, 0, 32, 32, 1);
  const auto null = vorobev_index(*model, levels, 1, 32, 32, 1);
  CHECK(sole.estimate >= 0.9);
  CHECK(sole.estimate <= 1.05);
  CHECK(sole.conditional_deviation == 0.0);
  CHECK(std::abs(null.estimate) <= 0.1);
  CHECK(null.vmd > 0.0);
}

TEST_CASE("a constant output set has no defined index") {
  const auto model = testing::separable(2, {constant(0.0), constant(0.0)}, square_grid(8, 8));
  CHECK_THROWS_AS(vorobev_index(*model, kLevels, 0, 4, 4, 1), DegenerateError);
}

TEST_CASE("size and bound preconditions") {
  const auto model = mixed_model(8);
  CHECK_THROWS_AS(vorobev_index(*model, kLevels, 0, 1, 4, 1), ParameterError);
  CHECK_THROWS_AS(vorobev_index(*model, kLevels, 0, 4, 1, 1), ParameterError);
  CHECK_THROWS_AS(vorobev_index(*model, kLevels, 7, 4, 4, 1), ParameterError);
  CHECK_THROWS_AS(conditional_median(*model, kLevels, 0, 1.5, 4, 1), DomainError);
}

TEST_CASE("two inner draws give the union of their sets") {
  const auto model = mixed_model(8);
  const std::uint64_t seed = 77;
  const double ui = 0.4;
  // Reproduce the inner stream: one uniform per free input, in input order.
  Rng rng(seed);
  std::vector<SetSample> sets;
  for (int l = 0; l < 2; ++l) {
    std::vector<double> u(3);
    for (std::size_t k = 0; k < 3; ++k) u[k] = k == 0 ? ui : rng.uniform();
    sets.push_back(lift_hypograph(model->evaluate(u), kLevels));
  }
  const SetSample median = conditional_median(*model, kLevels, 0, ui, 2, seed);
  const auto a = sets[0].to_mask(), b = sets[1].to_mask(), m = median.to_mask();
  std::size_t distinct = 0;
  for (std::size_t c = 0; c < median.grid().cells(); ++c) {
    REQUIRE(m.test(c) == (a.test(c) || b.test(c)));
    distinct += a.test(c) != b.test(c);
  }
  CHECK(distinct > 0);
}

TEST_CASE("conditional median of a model that ignores the other inputs") {
  const auto model = testing::separable(3, {constant(1.0)}, square_grid(6, 6));
  const std::vector<double> u{0.3, 0.9, 0.1};
  const SetSample direct = lift_hypograph(model->evaluate(u), kLevels);
  const SetSample median = conditional_median(*model, kLevels, 0, 0.3, 9, 4);
  CHECK(symdiff_count(direct, median) == 0);
}

TEST_CASE("budget is n_outer times n_inner and results are reproducible") {
  const auto model = mixed_model(16);
  model->reset_evaluations();
  const auto a = vorobev_index(*model, kLevels, 1, 32, 32, 5);
  CHECK(a.evaluations == 1024);
  CHECK(model->evaluations() == 1024);

  const std::size_t threads = num_threads();
  set_num_threads(1);
  const auto b = vorobev_index(*model, kLevels, 1, 32, 32, 5);
  set_num_threads(4);
  const auto c = vorobev_index(*model, kLevels, 1, 32, 32, 5);
  set_num_threads(threads);
  CHECK(a.estimate == b.estimate);
  CHECK(a.estimate == c.estimate);
  CHECK(a.vmd == c.vmd);
  CHECK(vorobev_index(*model, kLevels, 1, 32, 32, 6).estimate != a.estimate);
  const SetSample m1 = conditional_median(*model, kLevels, 0, 0.2, 32, 9);
  const SetSample m2 = conditional_median(*model, kLevels, 0, 0.2, 32, 9);
  CHECK(symdiff_count(m1, m2) == 0);
}

TEST_CASE("estimates stay within the population bounds at 64 x 64") {
  const auto model = mixed_model(16);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const double s = vorobev_index(*model, kLevels, i, 64, 64, seed).estimate;
      CHECK(s >= -0.05);
      CHECK(s <= 1.05);
    }
  }
}

TEST_CASE("relabeling the inputs permutes the indices") {
  const auto model = mixed_model(16);
  SeparableParams swapped;
  swapped.terms = {{2, constant(1.0), LinkKind::identity}, {0, {BasisKind::x1, 1.0}, LinkKind::identity}};
  const auto relabeled = make_synthetic(ModelKind::synthetic_separable, swapped, testing::unit_inputs(3), square_grid(16, 16));
  // original input k plays the role of relabeled input perm[k]
  const std::size_t perm[3] = {2, 0, 1};
  // single estimates have sd near 0.05 here, so compare means over 16 seeds
  for (std::size_t k = 0; k < 3; ++k) {
    double a = 0.0, b = 0.0;
    for (std::uint64_t seed = 0; seed < 16; ++seed) {
      a += vorobev_index(*model, kLevels, k, 64, 64, seed).estimate / 16.0;
      b += vorobev_index(*relabeled, kLevels, perm[k], 64, 64, 100 + seed).estimate / 16.0;
    }
    CHECK(std::abs(a - b) <= 0.05);
  }
}

TEST_CASE("bootstrap interval over the outer draws") {
  const auto model = mixed_model(16);
  BootstrapSpec spec;
  spec.B = 100;
  spec.seed = 2;
  const auto e = vorobev_index(*model, kLevels, 0, 32, 32, 3, spec);
  CHECK(e.has_ci);
  CHECK(e.B == 100);
  CHECK(e.ci_lo <= e.ci_hi);
  CHECK(e.ci_lo < 1.0);
  const auto again = vorobev_index(*model, kLevels, 0, 32, 32, 3, spec);
  CHECK(e.ci_lo == again.ci_lo);
  CHECK(e.ci_hi == again.ci_hi);
}
