#include "mapgsa/model.hpp"

#include "mapgsa/errors.hpp"
#include "mapgsa/parallel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace mapgsa {

void validate(const DomainGrid& grid) {
  if (grid.n1 < 1 || grid.n2 < 1) throw ParameterError("domain grid needs n1, n2 >= 1");
  if (!(grid.x1_lo < grid.x1_hi) || !(grid.x2_lo < grid.x2_hi)) throw ParameterError("domain bounds must be ordered");
}

void validate(const LevelGrid& levels) {
  if (levels.nc < 1) throw ParameterError("level grid needs nc >= 1");
  if (levels.nc > std::numeric_limits<SetSample::Level>::max()) throw ParameterError("nc too large");
  if (!(levels.c_min < levels.c_max)) throw ParameterError("level bounds must satisfy c_min < c_max");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::synthetic_separable: return "synthetic-separable";
    case ModelKind::synthetic_plume: return "synthetic-plume";
    case ModelKind::external_table: return "external-table";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "synthetic-separable") return ModelKind::synthetic_separable;
  if (name == "synthetic-plume") return ModelKind::synthetic_plume;
  if (name == "external-table") return ModelKind::external_table;
  throw ParameterError("unknown model kind '" + name + "'");
}

MapModel::MapModel(InputSpace inputs, DomainGrid grid) : inputs_(std::move(inputs)), grid_(grid) { validate(grid_); }

MapField MapModel::evaluate(std::span<const double> u) const {
  if (u.size() != inputs_.size()) {
    throw DomainError("model expects " + std::to_string(inputs_.size()) + " inputs, got " + std::to_string(u.size()));
  }
  if (!inputs_.contains(u)) throw DomainError("model input outside the input bounds");
  MapField field{grid_, std::vector<double>(grid_.cells())};
  compute(u, field.values);
  ++evaluations_;
  return field;
}

// ---------------------------------------------------------------------------

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::constant: return "constant";
    case BasisKind::sin1: return "sin1";
    case BasisKind::sin2: return "sin2";
    case BasisKind::cos1: return "cos1";
    case BasisKind::cos2: return "cos2";
    case BasisKind::x1: return "x1";
    case BasisKind::x2: return "x2";
    case BasisKind::bump: return "bump";
  }
  return "unknown";
}

BasisKind parse_basis_kind(const std::string& name) {
  static const std::map<std::string, BasisKind> names{
      {"constant", BasisKind::constant}, {"sin1", BasisKind::sin1}, {"sin2", BasisKind::sin2},
      {"cos1", BasisKind::cos1},         {"cos2", BasisKind::cos2}, {"x1", BasisKind::x1},
      {"x2", BasisKind::x2},             {"bump", BasisKind::bump}};
  auto it = names.find(name);
  if (it == names.end()) throw ParameterError("unknown basis map '" + name + "'");
  return it->second;
}

std::string to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::identity: return "identity";
    case LinkKind::square: return "square";
    case LinkKind::cube: return "cube";
    case LinkKind::sin: return "sin";
    case LinkKind::exp: return "exp";
  }
  return "unknown";
}

LinkKind parse_link_kind(const std::string& name) {
  static const std::map<std::string, LinkKind> names{{"identity", LinkKind::identity},
                                                     {"square", LinkKind::square},
                                                     {"cube", LinkKind::cube},
                                                     {"sin", LinkKind::sin},
                                                     {"exp", LinkKind::exp}};
  auto it = names.find(name);
  if (it == names.end()) throw ParameterError("unknown link function '" + name + "'");
  return it->second;
}

double BasisMap::operator()(double x1, double x2) const {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double b = 1.0;
  switch (kind) {
    case BasisKind::constant: b = 1.0; break;
    case BasisKind::sin1: b = std::sin(two_pi * x1); break;
    case BasisKind::sin2: b = std::sin(two_pi * x2); break;
    case BasisKind::cos1: b = std::cos(two_pi * x1); break;
    case BasisKind::cos2: b = std::cos(two_pi * x2); break;
    case BasisKind::x1: b = x1; break;
    case BasisKind::x2: b = x2; break;
    case BasisKind::bump: {
      const double d2 = (x1 - cx) * (x1 - cx) + (x2 - cy) * (x2 - cy);
      b = std::exp(-d2 / (2.0 * width * width));
      break;
    }
  }
  return scale * b;
}

double apply_link(LinkKind link, double u) {
  switch (link) {
    case LinkKind::identity: return u;
    case LinkKind::square: return u * u;
    case LinkKind::cube: return u * u * u;
    case LinkKind::sin: return std::sin(u);
    case LinkKind::exp: return std::exp(u);
  }
  return u;
}

namespace {

std::vector<double> sample_basis(const BasisMap& basis, const DomainGrid& grid) {
  std::vector<double> out(grid.cells());
  for (std::size_t k1 = 0; k1 < grid.n1; ++k1) {
    for (std::size_t k2 = 0; k2 < grid.n2; ++k2) out[k1 * grid.n2 + k2] = basis(grid.unit_x1(k1), grid.unit_x2(k2));
  }
  return out;
}

double link_variance(const Distribution& d, LinkKind link) {
  using boost::math::quadrature::gauss_kronrod;
  auto m1 = [&](double u) { return apply_link(link, u) * d.pdf(u); };
  auto m2 = [&](double u) {
    const double g = apply_link(link, u);
    return g * g * d.pdf(u);
  };
  const double e1 = gauss_kronrod<double, 31>::integrate(m1, d.lo(), d.hi(), 15, 1e-13);
  const double e2 = gauss_kronrod<double, 31>::integrate(m2, d.lo(), d.hi(), 15, 1e-13);
  return std::max(0.0, e2 - e1 * e1);
}

}  // namespace

SeparableModel::SeparableModel(InputSpace inputs, DomainGrid grid, SeparableParams params)
    : MapModel(std::move(inputs), grid), params_(std::move(params)) {
  const std::size_t p = this->inputs().size();
  link_var_.assign(p, 0.0);
  std::vector<bool> used(p, false);
  for (const auto& term : params_.terms) {
    if (term.input >= p) throw ParameterError("separable term references input " + std::to_string(term.input));
    if (used[term.input]) throw ParameterError("separable model allows one term per input");
    used[term.input] = true;
    term_maps_.push_back(sample_basis(term.basis, this->grid()));
    link_var_[term.input] = link_variance(this->inputs().distribution(term.input), term.link);
  }
  mean_map_ = sample_basis(params_.mean, this->grid());
}

void SeparableModel::compute(std::span<const double> u, std::span<double> out) const {
  std::copy(mean_map_.begin(), mean_map_.end(), out.begin());
  for (std::size_t t = 0; t < params_.terms.size(); ++t) {
    const auto& term = params_.terms[t];
    const double g = apply_link(term.link, u[term.input]);
    const auto& a = term_maps_[t];
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += a[c] * g;
  }
}

std::vector<std::vector<double>> SeparableModel::first_order_truth() const {
  const std::size_t p = inputs().size();
  const std::size_t cells = grid().cells();
  std::vector<std::vector<double>> truth(p, std::vector<double>(cells, 0.0));
  for (std::size_t c = 0; c < cells; ++c) {
    double total = 0.0;
    for (std::size_t t = 0; t < params_.terms.size(); ++t) {
      const double a = term_maps_[t][c];
      total += a * a * link_var_[params_.terms[t].input];
    }
    if (total <= 0.0) continue;
    for (std::size_t t = 0; t < params_.terms.size(); ++t) {
      const double a = term_maps_[t][c];
      const auto i = params_.terms[t].input;
      truth[i][c] = a * a * link_var_[i] / total;
    }
  }
  return truth;
}

std::vector<double> SeparableModel::generalized_truth() const {
  const std::size_t p = inputs().size();
  std::vector<double> part(p, 0.0);
  double total = 0.0;
  for (std::size_t t = 0; t < params_.terms.size(); ++t) {
    const auto i = params_.terms[t].input;
    double s = 0.0;
    for (double a : term_maps_[t]) s += a * a;
    part[i] = s * link_var_[i];
    total += part[i];
  }
  if (total > 0.0) {
    for (auto& v : part) v /= total;
  }
  return part;
}

// ---------------------------------------------------------------------------

PlumeModel::PlumeModel(InputSpace inputs, DomainGrid grid, PlumeParams params)
    : MapModel(std::move(inputs), grid), params_(params) {
  const std::size_t p = this->inputs().size();
  for (const auto* role : {&params_.angle_input, &params_.spread_input, &params_.amplitude_input,
                           &params_.background_input}) {
    if (role->has_value() && **role >= p) throw ParameterError("plume role references input " + std::to_string(**role));
  }
  if (!(params_.spread_lo > 0) || !(params_.spread_hi > 0)) throw ParameterError("plume spread must be positive");
  if (!(params_.aspect > 0)) throw ParameterError("plume aspect must be positive");
}

double PlumeModel::driven(const std::optional<std::size_t>& input, std::span<const double> u, double lo,
                          double hi) const {
  if (!input) return 0.5 * (lo + hi);
  const auto& d = inputs().dim(*input).dist;
  const double t = (u[*input] - d.lo) / (d.hi - d.lo);
  return lo + (hi - lo) * t;
}

void PlumeModel::compute(std::span<const double> u, std::span<double> out) const {
  const auto& pp = params_;
  const double angle = driven(pp.angle_input, u, pp.angle_lo, pp.angle_hi);
  const double spread = driven(pp.spread_input, u, pp.spread_lo, pp.spread_hi);
  const double amplitude = driven(pp.amplitude_input, u, pp.amplitude_lo, pp.amplitude_hi);
  const double background = driven(pp.background_input, u, pp.background_lo, pp.background_hi);
  const double ca = std::cos(angle), sa = std::sin(angle);
  const double cx = pp.source_x1 + pp.distance * ca;
  const double cy = pp.source_x2 + pp.distance * sa;
  const double cross_spread = pp.aspect * spread;
  const auto& g = grid();
  for (std::size_t k1 = 0; k1 < g.n1; ++k1) {
    const double dx = g.unit_x1(k1) - cx;
    for (std::size_t k2 = 0; k2 < g.n2; ++k2) {
      const double dy = g.unit_x2(k2) - cy;
      const double along = (dx * ca + dy * sa) / spread;
      const double cross = (-dx * sa + dy * ca) / cross_spread;
      out[k1 * g.n2 + k2] = background + amplitude * std::exp(-0.5 * (along * along + cross * cross));
    }
  }
}

ModelPtr make_synthetic(ModelKind kind, const SyntheticParams& params, const InputSpace& inputs,
                        const DomainGrid& grid) {
  switch (kind) {
    case ModelKind::synthetic_separable:
      if (const auto* p = std::get_if<SeparableParams>(&params)) return std::make_shared<SeparableModel>(inputs, grid, *p);
      throw ParameterError("synthetic-separable requires separable parameters");
    case ModelKind::synthetic_plume:
      if (const auto* p = std::get_if<PlumeParams>(&params)) return std::make_shared<PlumeModel>(inputs, grid, *p);
      throw ParameterError("synthetic-plume requires plume parameters");
    case ModelKind::external_table:
      break;
  }
  throw ParameterError("make_synthetic: '" + to_string(kind) + "' is not a synthetic model kind");
}

// ---------------------------------------------------------------------------

TableData parse_table(const std::string& text) {
  std::istringstream in(text);
  TableData data;
  std::string line;
  auto next_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      if (out.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line(line)) throw ParameterError("table: missing header line");
  {
    std::istringstream header(line);
    long long n1 = 0, n2 = 0;
    if (!(header >> n1 >> n2) || n1 < 1 || n2 < 1) throw ParameterError("table: header must be 'n1 n2' with n1, n2 >= 1");
    data.n1 = static_cast<std::size_t>(n1);
    data.n2 = static_cast<std::size_t>(n2);
  }
  const std::size_t cells = data.n1 * data.n2;
  std::size_t p = 0;
  while (next_line(line)) {
    TableRecord rec;
    std::istringstream ul(line);
    for (double v; ul >> v;) rec.u.push_back(v);
    if (!ul.eof()) throw ParameterError("table: malformed input line in record " + std::to_string(data.records.size() + 1));
    if (rec.u.empty()) throw ParameterError("table: empty input line");
    if (p == 0) p = rec.u.size();
    if (rec.u.size() != p) throw ParameterError("table: inconsistent number of inputs across records");
    rec.field.reserve(cells);
    while (rec.field.size() < cells) {
      if (!next_line(line)) throw ParameterError("table: truncated field in record " + std::to_string(data.records.size() + 1));
      std::istringstream fl(line);
      for (double v; fl >> v;) rec.field.push_back(v);
      if (!fl.eof()) throw ParameterError("table: malformed field value");
    }
    if (rec.field.size() != cells) throw ParameterError("table: field size does not match header");
    for (double v : rec.field) {
      if (!std::isfinite(v)) throw ParameterError("table: non-finite field value");
    }
    data.records.push_back(std::move(rec));
  }
  if (data.records.empty()) throw ParameterError("table: no records");
  return data;
}

TableData load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open table file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_table(buf.str());
}

std::string format_table(const TableData& data) {
  std::ostringstream out;
  out.precision(17);
  out << data.n1 << ' ' << data.n2 << '\n';
  for (const auto& rec : data.records) {
    for (std::size_t k = 0; k < rec.u.size(); ++k) out << (k ? " " : "") << rec.u[k];
    out << '\n';
    for (std::size_t k1 = 0; k1 < data.n1; ++k1) {
      for (std::size_t k2 = 0; k2 < data.n2; ++k2) out << (k2 ? " " : "") << rec.field[k1 * data.n2 + k2];
      out << '\n';
    }
  }
  return out.str();
}

TableModel::TableModel(InputSpace inputs, DomainGrid grid, TableData data)
    : MapModel(std::move(inputs), grid), data_(std::move(data)) {
  if (data_.n1 != this->grid().n1 || data_.n2 != this->grid().n2) throw GridMismatch("table grid does not match the domain grid");
  for (const auto& rec : data_.records) {
    if (rec.u.size() != this->inputs().size()) throw ParameterError("table records do not match the input space size");
  }
}

Matrix TableModel::stored_inputs() const {
  Matrix out(static_cast<Eigen::Index>(data_.records.size()), static_cast<Eigen::Index>(inputs().size()));
  for (std::size_t r = 0; r < data_.records.size(); ++r) {
    for (std::size_t c = 0; c < inputs().size(); ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data_.records[r].u[c];
    }
  }
  return out;
}

void TableModel::compute(std::span<const double> u, std::span<double> out) const {
  for (const auto& rec : data_.records) {
    if (std::equal(rec.u.begin(), rec.u.end(), u.begin(), u.end())) {
      std::copy(rec.field.begin(), rec.field.end(), out.begin());
      return;
    }
  }
  throw DomainError("external table has no record for the requested input");
}

// ---------------------------------------------------------------------------

InputSpace FrozenModel::free_space(const InputSpace& full, const std::vector<std::optional<double>>& fixed) {
  if (fixed.size() != full.size()) throw ParameterError("frozen model: one entry per input required");
  std::vector<InputDim> dims;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (fixed[i]) {
      const auto& d = full.dim(i).dist;
      if (!(*fixed[i] >= d.lo && *fixed[i] <= d.hi)) throw ParameterError("frozen value outside the bounds of '" + full.dim(i).name + "'");
    } else {
      dims.push_back(full.dim(i));
    }
  }
  return InputSpace(std::move(dims));
}

FrozenModel::FrozenModel(ModelPtr base, std::vector<std::optional<double>> fixed)
    : MapModel(free_space(base->inputs(), fixed), base->grid()), base_(std::move(base)), fixed_(std::move(fixed)) {}

void FrozenModel::compute(std::span<const double> u, std::span<double> out) const {
  std::vector<double> full(fixed_.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < fixed_.size(); ++i) full[i] = fixed_[i] ? *fixed_[i] : u[k++];
  const MapField f = base_->evaluate(full);
  std::copy(f.values.begin(), f.values.end(), out.begin());
}

// ---------------------------------------------------------------------------

SetGrid set_grid(const DomainGrid& grid, const LevelGrid& levels) { return SetGrid{grid.n1, grid.n2, levels.nc}; }

std::size_t hypograph_level(double value, const LevelGrid& levels) {
  const std::size_t nc = levels.nc;
  if (std::isnan(value)) return 0;
  const double step = (levels.c_max - levels.c_min) / static_cast<double>(nc);
  const double guess = std::floor((value - levels.c_min) / step + 0.5);
  std::size_t l = 0;
  if (guess >= static_cast<double>(nc)) l = nc;
  else if (guess > 0) l = static_cast<std::size_t>(guess);
  while (l < nc && levels.level(l) <= value) ++l;
  while (l > 0 && levels.level(l - 1) > value) --l;
  return l;
}

SetSample lift_hypograph(const MapField& field, const LevelGrid& levels) {
  validate(levels);
  std::vector<SetSample::Level> out(field.values.size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] = static_cast<SetSample::Level>(hypograph_level(field.values[c], levels));
  }
  return SetSample::hypograph(set_grid(field.grid, levels), std::move(out));
}

std::vector<SetSample> lift_all(const MapModel& model, const LevelGrid& levels, const Matrix& inputs) {
  std::vector<SetSample> sets(static_cast<std::size_t>(inputs.rows()));
  parallel_for(sets.size(), [&](std::size_t r) {
    const auto row = inputs.row(static_cast<Eigen::Index>(r));
    const std::vector<double> u(row.begin(), row.end());
    sets[r] = lift_hypograph(model.evaluate(u), levels);
  });
  return sets;
}

LevelGrid auto_levels(const MapModel& model, std::size_t nc, std::uint64_t seed, std::size_t pilot) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  auto absorb = [&](const std::vector<double>& values) {
    for (double v : values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  };
  if (const auto* table = dynamic_cast<const TableModel*>(&model)) {
    const auto& recs = table->data().records;
    for (std::size_t r = 0; r < std::min(pilot, recs.size()); ++r) absorb(recs[r].field);
  } else {
    const Matrix u = monte_carlo(model.inputs(), pilot, seed);
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      const auto row = u.row(r);
      absorb(model.evaluate(std::vector<double>(row.begin(), row.end())).values);
    }
  }
  double pad = 0.05 * (hi - lo);
  if (!(pad > 0)) pad = std::max(1e-6, 0.05 * std::abs(lo));
  LevelGrid out{lo - pad, hi + pad, nc};
  validate(out);
  return out;
}

}  // namespace mapgsa
