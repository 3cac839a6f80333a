#pragma once

#include "mapgsa/model.hpp"
#include "mapgsa/rng.hpp"
#include "mapgsa/sampling.hpp"
#include "mapgsa/setgrid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace testing {

inline mapgsa::InputSpace unit_inputs(std::size_t p) {
  std::vector<mapgsa::InputDim> dims;
  for (std::size_t i = 0; i < p; ++i) dims.push_back({"u" + std::to_string(i + 1), mapgsa::DistributionSpec::uniform(0, 1)});
  return mapgsa::InputSpace(dims);
}

inline mapgsa::DomainGrid square_grid(std::size_t n1, std::size_t n2) { return {0.0, 1.0, 0.0, 1.0, n1, n2}; }

/// Y(x) = sum_i scale_i * a_i(x) * u_i with identity links.
inline mapgsa::ModelPtr separable(std::size_t p, std::vector<mapgsa::BasisMap> bases, mapgsa::DomainGrid grid) {
  mapgsa::SeparableParams params;
  for (std::size_t i = 0; i < bases.size(); ++i) params.terms.push_back({i, bases[i], mapgsa::LinkKind::identity});
  return mapgsa::make_synthetic(mapgsa::ModelKind::synthetic_separable, params, unit_inputs(p), grid);
}

inline mapgsa::BasisMap constant(double scale) { return {mapgsa::BasisKind::constant, scale}; }
inline mapgsa::BasisMap sin1() { return {mapgsa::BasisKind::sin1, 1.0}; }

inline mapgsa::SetSample random_hypograph(const mapgsa::SetGrid& g, mapgsa::Rng& rng) {
  std::vector<mapgsa::SetSample::Level> levels(g.columns());
  for (auto& l : levels) l = static_cast<mapgsa::SetSample::Level>(rng.below(g.nc + 1));
  return mapgsa::SetSample::hypograph(g, levels);
}

inline mapgsa::SetSample random_mask(const mapgsa::SetGrid& g, mapgsa::Rng& rng, double density = 0.5) {
  mapgsa::PackedMask m(g.cells());
  for (std::size_t k = 0; k < g.cells(); ++k) m.set(k, rng.uniform() < density);
  return mapgsa::SetSample::from_mask(g, m);
}

}  // namespace testing
