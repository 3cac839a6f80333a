#include "helpers.hpp"

#include "mapgsa/errors.hpp"
#include "mapgsa/model.hpp"
#include "mapgsa/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace mapgsa;
using testing::constant;
using testing::sin1;
using testing::square_grid;
using testing::unit_inputs;

TEST_CASE("separable field: sin(2 pi x1) u1 + u2 at the corners of the input box") {
  const auto model = testing::separable(2, {sin1(), constant(1.0)}, square_grid(2, 3));
  const std::vector<double> zero{0.0, 0.0}, one{1.0, 1.0};
  for (double v : model->evaluate(zero).values) CHECK(v == 0.0);
  const MapField f = model->evaluate(one);
  // unit x1 = 0.25 on the first row of a 2-row grid
  for (std::size_t k2 = 0; k2 < 3; ++k2) CHECK(f.at(0, k2) == doctest::Approx(2.0).epsilon(1e-15));
  for (std::size_t k2 = 0; k2 < 3; ++k2) CHECK(f.at(1, k2) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("basis maps and links by hand") {
  CHECK(BasisMap{BasisKind::x2, 3.0}(0.1, 0.4) == doctest::Approx(1.2));
  CHECK(BasisMap{BasisKind::cos1, 1.0}(0.5, 0.0) == doctest::Approx(-1.0));
  const BasisMap bump{BasisKind::bump, 2.0, 0.5, 0.5, 0.1};
  CHECK(bump(0.5, 0.5) == doctest::Approx(2.0));
  CHECK(bump(0.6, 0.5) == doctest::Approx(2.0 * std::exp(-0.5)));
  CHECK(apply_link(LinkKind::cube, -2.0) == -8.0);
  CHECK(apply_link(LinkKind::exp, 0.0) == 1.0);
  CHECK_THROWS_AS(parse_link_kind("tanh"), ParameterError);
  CHECK(parse_basis_kind(to_string(BasisKind::sin2)) == BasisKind::sin2);
}

TEST_CASE("evaluation outside the input bounds is a domain error") {
  const auto model = testing::separable(2, {sin1(), constant(1.0)}, square_grid(2, 2));
  const std::vector<double> bad{1.5, 0.0};
  CHECK_THROWS_AS(model->evaluate(bad), DomainError);
  const std::vector<double> short_u{0.5};
  CHECK_THROWS(model->evaluate(short_u));
}

TEST_CASE("hypograph lift at the level boundaries") {
  const LevelGrid levels{0.0, 1.0, 10};  // level k sits at (k + 0.5) / 10
  CHECK(hypograph_level(-0.2, levels) == 0);
  CHECK(hypograph_level(0.04, levels) == 0);
  CHECK(hypograph_level(1.7, levels) == 10);
  CHECK(hypograph_level(levels.level(2), levels) == 3);
  CHECK(hypograph_level(std::nextafter(levels.level(2), 0.0), levels) == 2);
  CHECK(hypograph_level(levels.level(9), levels) == 10);

  MapField f{square_grid(1, 3), {-5.0, levels.level(4), 5.0}};
  const SetSample s = lift_hypograph(f, levels);
  REQUIRE(s.is_hypograph());
  CHECK(s.levels()[0] == 0);
  CHECK(s.levels()[1] == 5);
  CHECK(s.levels()[2] == 10);
}

TEST_CASE("hypograph level agrees with a linear count on random values") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const LevelGrid levels{-3.0 * rng.uniform(), 1.0 + 4.0 * rng.uniform(), 1 + rng.below(60)};
    for (int k = 0; k < 200; ++k) {
      double v = levels.c_min - 1.0 + (levels.c_max - levels.c_min + 2.0) * rng.uniform();
      if (k % 5 == 0) v = levels.level(rng.below(levels.nc));
      std::size_t count = 0;
      for (std::size_t l = 0; l < levels.nc; ++l) count += levels.level(l) <= v;
      REQUIRE(hypograph_level(v, levels) == count);
    }
  }
}

TEST_CASE("lift is monotone: a pointwise larger field has a larger hypograph") {
  Rng rng(5);
  const auto grid = square_grid(6, 5);
  const LevelGrid levels{-1.0, 1.0, 17};
  for (int trial = 0; trial < 30; ++trial) {
    MapField lo{grid, std::vector<double>(grid.cells())};
    MapField hi = lo;
    for (std::size_t c = 0; c < grid.cells(); ++c) {
      lo.values[c] = -1.2 + 2.4 * rng.uniform();
      hi.values[c] = lo.values[c] + 0.5 * rng.uniform();
    }
    const SetSample a = lift_hypograph(lo, levels), b = lift_hypograph(hi, levels);
    for (std::size_t c = 0; c < grid.cells(); ++c) REQUIRE(a.levels()[c] <= b.levels()[c]);
    CHECK(volume(a) <= volume(b));
  }
}

TEST_CASE("repeated evaluation is bit-identical and counted") {
  InputSpace space = unit_inputs(4);
  PlumeParams pp;
  pp.angle_input = 0;
  pp.spread_input = 1;
  pp.amplitude_input = 2;
  pp.background_input = 3;
  const auto model = make_synthetic(ModelKind::synthetic_plume, pp, space, square_grid(16, 12));
  const std::vector<double> u{0.3, 0.7, 0.1, 0.9};
  model->reset_evaluations();
  const auto a = model->evaluate(u), b = model->evaluate(u);
  CHECK(a.values == b.values);
  CHECK(model->evaluations() == 2);
  // amplitude and background bound the field
  double lo = 1e9, hi = -1e9;
  for (double v : a.values) lo = std::min(lo, v), hi = std::max(hi, v);
  const double background = pp.background_lo + 0.9 * (pp.background_hi - pp.background_lo);
  const double amplitude = pp.amplitude_lo + 0.1 * (pp.amplitude_hi - pp.amplitude_lo);
  CHECK(lo >= background);
  CHECK(hi <= background + amplitude + 1e-12);
}

TEST_CASE("plume peak follows the angle input") {
  InputSpace space = unit_inputs(1);
  PlumeParams pp;
  pp.angle_input = 0;
  pp.angle_lo = 0.0;
  pp.angle_hi = std::numbers::pi / 2;
  const auto grid = square_grid(40, 40);
  const auto model = make_synthetic(ModelKind::synthetic_plume, pp, space, grid);
  auto argmax = [&](double u) {
    const std::vector<double> uu{u};
    const auto f = model->evaluate(uu);
    return static_cast<std::size_t>(std::max_element(f.values.begin(), f.values.end()) - f.values.begin());
  };
  const std::size_t east = argmax(0.0), north = argmax(1.0);
  // angle 0 moves the peak along x1, angle pi/2 along x2
  CHECK(east / grid.n2 > north / grid.n2);
  CHECK(north % grid.n2 > east % grid.n2);
}

TEST_CASE("model construction rejects bad references") {
  SeparableParams sp;
  sp.terms.push_back({3, constant(1.0), LinkKind::identity});
  CHECK_THROWS_AS(make_synthetic(ModelKind::synthetic_separable, sp, unit_inputs(2), square_grid(2, 2)), ParameterError);
  sp.terms = {{0, constant(1.0), LinkKind::identity}, {0, constant(2.0), LinkKind::identity}};
  CHECK_THROWS_AS(make_synthetic(ModelKind::synthetic_separable, sp, unit_inputs(2), square_grid(2, 2)), ParameterError);
  CHECK_THROWS_AS(make_synthetic(ModelKind::synthetic_plume, sp, unit_inputs(2), square_grid(2, 2)), ParameterError);
  PlumeParams pp;
  pp.spread_input = 5;
  CHECK_THROWS_AS(make_synthetic(ModelKind::synthetic_plume, pp, unit_inputs(2), square_grid(2, 2)), ParameterError);
}

TEST_CASE("link variances match closed forms") {
  SeparableParams sp;
  sp.terms = {{0, constant(1.0), LinkKind::identity},
              {1, constant(1.0), LinkKind::square},
              {2, constant(1.0), LinkKind::exp}};
  std::vector<InputDim> dims = {{"a", DistributionSpec::uniform(0, 1)},
                                {"b", DistributionSpec::uniform(0, 1)},
                                {"c", DistributionSpec::uniform(-1, 2)},
                                {"d", DistributionSpec::uniform(0, 1)}};
  SeparableModel model(InputSpace(dims), square_grid(1, 1), sp);
  const auto& v = model.link_variances();
  CHECK(v[0] == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(1.0 / 5.0 - 1.0 / 9.0).epsilon(1e-12));
  const double e = std::numbers::e;
  const double m1 = (e * e - 1.0 / e) / 3.0, m2 = (std::pow(e, 4) - std::pow(e, -2)) / 6.0;
  CHECK(v[2] == doctest::Approx(m2 - m1 * m1).epsilon(1e-10));
  CHECK(v[3] == 0.0);
}

TEST_CASE("first-order truth: closed form and a Monte Carlo cross-check") {
  // Y(x) = s(x) u1 + u2 with s = sin(2 pi x1): S1 = s^2 / (s^2 + 1)
  const auto grid = square_grid(4, 1);
  const auto model = testing::separable(2, {sin1(), constant(1.0)}, grid);
  const auto& sep = dynamic_cast<const SeparableModel&>(*model);
  const auto truth = sep.first_order_truth();
  for (std::size_t k1 = 0; k1 < grid.n1; ++k1) {
    const double s = std::sin(2.0 * std::numbers::pi * grid.unit_x1(k1));
    CHECK(truth[0][k1] == doctest::Approx(s * s / (s * s + 1.0)).epsilon(1e-12));
    CHECK(truth[0][k1] + truth[1][k1] == doctest::Approx(1.0));
  }

  // Var of the u1 part over the total variance by plain sampling.
  const std::size_t n = 1'000'000;
  const Matrix u = monte_carlo(model->inputs(), n, 2024);
  std::vector<double> sum(grid.cells()), sum2(grid.cells()), sa(grid.cells()), sa2(grid.cells());
  for (std::size_t r = 0; r < n; ++r) {
    const std::vector<double> row{u(static_cast<Eigen::Index>(r), 0), u(static_cast<Eigen::Index>(r), 1)};
    const auto f = model->evaluate(row);
    for (std::size_t c = 0; c < grid.cells(); ++c) {
      const double s = std::sin(2.0 * std::numbers::pi * grid.unit_x1(c));
      const double part = s * row[0];
      sum[c] += f.values[c];
      sum2[c] += f.values[c] * f.values[c];
      sa[c] += part;
      sa2[c] += part * part;
    }
  }
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    const double var = sum2[c] / n - (sum[c] / n) * (sum[c] / n);
    const double var1 = sa2[c] / n - (sa[c] / n) * (sa[c] / n);
    CHECK(var1 / var == doctest::Approx(truth[0][c]).epsilon(0.01));
  }

  const auto gen = sep.generalized_truth();
  // sum_x sin^2 over the 4 centers is 2; the constant term contributes 4
  CHECK(gen[0] == doctest::Approx(2.0 / 6.0));
  CHECK(gen[1] == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("table round trip and exact lookup") {
  TableData data;
  data.n1 = 2;
  data.n2 = 2;
  data.records.push_back({{0.25, 0.5}, {1.0, 2.0, 3.0, 4.0}});
  data.records.push_back({{0.1, 0.2}, {0.1, 1e-17, -3.5, 4.0 / 3.0}});
  const TableData back = parse_table(format_table(data));
  REQUIRE(back.records.size() == 2);
  CHECK(back.records[1].field == data.records[1].field);
  CHECK(back.records[1].u == data.records[1].u);

  TableModel model(unit_inputs(2), square_grid(2, 2), back);
  const std::vector<double> hit{0.1, 0.2}, miss{0.1, 0.3};
  CHECK(model.evaluate(hit).values == data.records[1].field);
  CHECK_THROWS_AS(model.evaluate(miss), DomainError);
  CHECK(model.stored_inputs()(0, 1) == 0.5);
  CHECK_THROWS_AS(TableModel(unit_inputs(2), square_grid(3, 2), back), GridMismatch);

  CHECK_THROWS_AS(parse_table(""), ParameterError);
  CHECK_THROWS_AS(parse_table("2 2\n0.1 0.2\n1 2 3\n"), ParameterError);
  CHECK_THROWS_AS(parse_table("1 1\n0.1\nnan\n"), ParameterError);
  CHECK_THROWS_AS(parse_table("1 1\n0.1\n1\n0.1 0.2\n3\n"), ParameterError);
}

TEST_CASE("frozen model drops fixed inputs and re-inserts them") {
  const auto base = testing::separable(3, {constant(1.0), constant(10.0), constant(100.0)}, square_grid(1, 2));
  FrozenModel frozen(base, {std::nullopt, 0.5, std::nullopt});
  REQUIRE(frozen.inputs().size() == 2);
  CHECK(frozen.inputs().dim(1).name == "u3");
  const std::vector<double> u{0.2, 0.3}, full{0.2, 0.5, 0.3};
  CHECK(frozen.evaluate(u).values == base->evaluate(full).values);
  CHECK_THROWS_AS(FrozenModel(base, {std::nullopt, 2.0, std::nullopt}), ParameterError);
  CHECK_THROWS_AS(FrozenModel(base, {std::nullopt}), ParameterError);
}

TEST_CASE("automatic levels cover the pilot fields with a margin") {
  const auto model = testing::separable(2, {sin1(), constant(1.0)}, square_grid(8, 4));
  const LevelGrid levels = auto_levels(*model, 32, 9, 64);
  const Matrix u = monte_carlo(model->inputs(), 64, 9);
  double lo = 1e9, hi = -1e9;
  for (Eigen::Index r = 0; r < u.rows(); ++r) {
    const std::vector<double> row{u(r, 0), u(r, 1)};
    for (double v : model->evaluate(row).values) lo = std::min(lo, v), hi = std::max(hi, v);
  }
  CHECK(levels.nc == 32);
  CHECK(levels.c_min == doctest::Approx(lo - 0.05 * (hi - lo)));
  CHECK(levels.c_max == doctest::Approx(hi + 0.05 * (hi - lo)));

  const auto flat = testing::separable(1, {constant(0.0)}, square_grid(2, 2));
  const LevelGrid degenerate = auto_levels(*flat, 4, 1, 8);
  CHECK(degenerate.c_max > degenerate.c_min);
}
