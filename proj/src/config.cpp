#include "mapgsa/config.hpp"

#include "mapgsa/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace mapgsa {
namespace {

int line_of(const YAML::Node& node) { return node.Mark().is_null() ? 0 : node.Mark().line + 1; }

/// Typed access to one YAML mapping with strict key checking.
class Table {
 public:
  Table(const YAML::Node& node, std::string path, RunConfig& cfg) : node_(node), path_(std::move(path)), cfg_(cfg) {
    if (!node_.IsMap()) throw ConfigError(path_, line_of(node_), "expected a mapping");
    cfg_.lines[path_] = line_of(node_);
  }

  /// Rejects keys outside `allowed`.
  void only(std::initializer_list<const char*> allowed) const {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!ok.count(key)) throw ConfigError(join(key), line_of(kv.first), "unknown key");
    }
  }

  bool has(const char* key) const { return static_cast<bool>(node_[key]); }
  YAML::Node raw(const char* key) const { return node_[key]; }
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  T get(const char* key, T fallback) const {
    const auto v = node_[key];
    if (!v) return fallback;
    cfg_.lines[join(key)] = line_of(v);
    return convert<T>(v, join(key));
  }

  template <class T>
  T require(const char* key) const {
    const auto v = node_[key];
    if (!v) throw ConfigError(join(key), line_of(node_), "missing required key");
    cfg_.lines[join(key)] = line_of(v);
    return convert<T>(v, join(key));
  }

  std::pair<double, double> pair(const char* key) const {
    const auto v = node_[key];
    if (!v.IsSequence() || v.size() != 2) throw ConfigError(join(key), line_of(v), "expected [lo, hi]");
    cfg_.lines[join(key)] = line_of(v);
    return {convert<double>(v[0], join(key)), convert<double>(v[1], join(key))};
  }

  template <class T, class F>
  T named(const char* key, T fallback, F parse) const {
    const auto v = node_[key];
    if (!v) return fallback;
    const auto name = get<std::string>(key, "");
    try {
      return parse(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(join(key), line_of(v), e.what());
    }
  }

  int line() const { return line_of(node_); }
  const std::string& path() const { return path_; }

  template <class T>
  static T convert(const YAML::Node& v, const std::string& key) {
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        const auto text = v.as<std::string>();
        if (!text.empty() && text.front() == '-') throw ConfigError(key, line_of(v), "expected a non-negative integer");
      }
      return v.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(key, line_of(v), "cannot read value '" + (v.IsScalar() ? v.Scalar() : std::string("<node>")) + "'");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  RunConfig& cfg_;
};

std::string indexed(const std::string& base, std::size_t k) { return base + "[" + std::to_string(k) + "]"; }

InputConfig parse_input(const Table& t) {
  t.only({"name", "dist", "bounds", "mu", "sigma", "xi", "omega", "alpha", "fixed"});
  InputConfig in;
  in.dim.name = t.require<std::string>("name");
  auto& d = in.dim.dist;
  d.kind = t.named("dist", DistKind::uniform, parse_dist_kind);
  std::tie(d.lo, d.hi) = t.pair("bounds");
  d.mu = t.get("mu", 0.5 * (d.lo + d.hi));
  d.sigma = t.get("sigma", d.hi - d.lo);
  d.xi = t.get("xi", d.mu);
  d.omega = t.get("omega", d.sigma);
  d.alpha = t.get("alpha", 0.0);
  if (t.has("fixed")) in.fixed = t.get("fixed", 0.0);
  return in;
}

std::size_t input_index(const std::vector<InputConfig>& inputs, const std::string& name, const std::string& key, int line) {
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (inputs[k].dim.name == name) return k;
  }
  throw ConfigError(key, line, "unknown input '" + name + "'");
}

BasisMap parse_basis(const Table& t) {
  BasisMap b;
  b.kind = t.named("basis", BasisKind::constant, parse_basis_kind);
  b.scale = t.get("scale", 1.0);
  b.cx = t.get("cx", 0.5);
  b.cy = t.get("cy", 0.5);
  b.width = t.get("width", 0.2);
  return b;
}

void parse_model(const Table& t, RunConfig& cfg) {
  auto& m = cfg.model;
  m.kind = t.named("kind", ModelKind::synthetic_separable, parse_model_kind);
  switch (m.kind) {
    case ModelKind::synthetic_separable: {
      t.only({"kind", "mean", "terms"});
      if (t.has("mean")) {
        Table mt(t.raw("mean"), t.join("mean"), cfg);
        mt.only({"basis", "scale", "cx", "cy", "width"});
        m.separable.mean = parse_basis(mt);
      }
      const auto terms = t.raw("terms");
      if (!terms || !terms.IsSequence()) throw ConfigError(t.join("terms"), t.line(), "expected a list of terms");
      for (std::size_t k = 0; k < terms.size(); ++k) {
        Table tt(terms[k], indexed(t.join("terms"), k), cfg);
        tt.only({"input", "basis", "scale", "cx", "cy", "width", "link"});
        SeparableTerm term;
        term.input = input_index(cfg.inputs, tt.require<std::string>("input"), tt.join("input"), tt.line());
        term.basis = parse_basis(tt);
        term.link = tt.named("link", LinkKind::identity, parse_link_kind);
        m.separable.terms.push_back(term);
      }
      break;
    }
    case ModelKind::synthetic_plume: {
      t.only({"kind", "angle", "spread", "amplitude", "background", "angle_range", "spread_range", "amplitude_range",
              "background_range", "source", "distance", "aspect"});
      auto role = [&](const char* key) -> std::optional<std::size_t> {
        if (!t.has(key)) return std::nullopt;
        return input_index(cfg.inputs, t.get<std::string>(key, ""), t.join(key), t.line());
      };
      auto& p = m.plume;
      p.angle_input = role("angle");
      p.spread_input = role("spread");
      p.amplitude_input = role("amplitude");
      p.background_input = role("background");
      if (t.has("angle_range")) std::tie(p.angle_lo, p.angle_hi) = t.pair("angle_range");
      if (t.has("spread_range")) std::tie(p.spread_lo, p.spread_hi) = t.pair("spread_range");
      if (t.has("amplitude_range")) std::tie(p.amplitude_lo, p.amplitude_hi) = t.pair("amplitude_range");
      if (t.has("background_range")) std::tie(p.background_lo, p.background_hi) = t.pair("background_range");
      if (t.has("source")) std::tie(p.source_x1, p.source_x2) = t.pair("source");
      p.distance = t.get("distance", p.distance);
      p.aspect = t.get("aspect", p.aspect);
      break;
    }
    case ModelKind::external_table: {
      t.only({"kind", "path"});
      m.path = t.require<std::string>("path");
      break;
    }
  }
}

void parse_grid(const Table& t, RunConfig& cfg) {
  t.only({"n1", "n2", "nc", "c_bounds", "d_bounds", "pilot_seed"});
  auto& g = cfg.grid;
  g.domain.n1 = t.get<std::size_t>("n1", g.domain.n1);
  g.domain.n2 = t.get<std::size_t>("n2", g.domain.n2);
  g.nc = t.get<std::size_t>("nc", g.nc);
  g.pilot_seed = t.get<std::uint64_t>("pilot_seed", g.pilot_seed);
  if (t.has("c_bounds")) {
    const auto v = t.raw("c_bounds");
    if (v.IsScalar() && v.Scalar() == "auto") g.c_bounds.reset();
    else g.c_bounds = t.pair("c_bounds");
  }
  if (t.has("d_bounds")) {
    const auto v = t.raw("d_bounds");
    const auto key = t.join("d_bounds");
    if (!v.IsSequence() || v.size() != 2 || !v[0].IsSequence() || !v[1].IsSequence() || v[0].size() != 2 || v[1].size() != 2)
      throw ConfigError(key, line_of(v), "expected [[x1_lo, x1_hi], [x2_lo, x2_hi]]");
    g.domain.x1_lo = Table::convert<double>(v[0][0], key);
    g.domain.x1_hi = Table::convert<double>(v[0][1], key);
    g.domain.x2_lo = Table::convert<double>(v[1][0], key);
    g.domain.x2_hi = Table::convert<double>(v[1][1], key);
    cfg.lines[key] = line_of(v);
  }
}

AnalysisConfig parse_analysis(const Table& t, RunConfig& cfg) {
  t.only({"method", "n", "seed", "inputs", "bootstrap", "generator", "n_outer", "n_inner", "family", "n_a", "axis",
          "law", "kernel", "bandwidth", "sigma2", "pvalue", "b_perm"});
  AnalysisConfig a;
  if (!t.has("method")) throw ConfigError(t.join("method"), t.line(), "missing required key");
  a.method = t.named("method", a.method, parse_method);
  a.n = t.get<std::size_t>("n", a.method == Method::vorobev ? 32 * 32 : 1000);
  a.seed = t.get<std::uint64_t>("seed", 0);
  a.bootstrap = t.get("bootstrap", true);
  if (t.has("inputs")) {
    const auto v = t.raw("inputs");
    if (!v.IsSequence()) throw ConfigError(t.join("inputs"), line_of(v), "expected a list of input names");
    for (const auto& item : v) {
      const auto name = Table::convert<std::string>(item, t.join("inputs"));
      input_index(cfg.inputs, name, t.join("inputs"), line_of(item));
      a.targets.push_back(name);
    }
  }
  auto allow = [&](const char* key, std::initializer_list<Method> methods) {
    if (!t.has(key)) return;
    for (auto m : methods) {
      if (m == a.method) return;
    }
    throw ConfigError(t.join(key), line_of(t.raw(key)), "not a parameter of method '" + to_string(a.method) + "'");
  };
  allow("generator", {Method::sobol_maps, Method::generalized_sobol});
  allow("n_outer", {Method::vorobev});
  allow("n_inner", {Method::vorobev});
  for (auto key : {"family", "n_a", "axis", "law"}) allow(key, {Method::universal});
  for (auto key : {"kernel", "bandwidth", "sigma2", "pvalue", "b_perm"}) allow(key, {Method::hsic});

  a.generator = t.named("generator", a.generator, parse_generator);
  a.n_outer = t.get<std::size_t>("n_outer", a.n_outer);
  a.n_inner = t.get<std::size_t>("n_inner", a.n_inner);
  a.family = t.named("family", a.family, parse_family_kind);
  a.n_a = t.get<std::size_t>("n_a", a.n_a);
  a.axis = t.get("axis", a.axis);
  if (t.has("law")) {
    Table lt(t.raw("law"), t.join("law"), cfg);
    lt.only({"dist", "bounds", "mu", "sigma", "xi", "omega", "alpha"});
    lt.require<std::string>("dist");
    a.law = parse_input([&] {
      // Reuse the input grammar without a name.
      YAML::Node copy = YAML::Clone(t.raw("law"));
      copy["name"] = "law";
      return Table(copy, t.join("law"), cfg);
    }()).dim.dist;
  }
  a.kernel = t.named("kernel", a.kernel, parse_kernel_kind);
  a.bandwidth = t.get("bandwidth", a.bandwidth);
  if (t.has("sigma2")) a.sigma2 = t.get("sigma2", 0.0);
  a.pvalue = t.named("pvalue", a.pvalue, parse_pvalue_method);
  a.b_perm = t.get<std::size_t>("b_perm", a.b_perm);
  return a;
}

BootstrapSpec parse_bootstrap(const Table& t) {
  t.only({"b", "level", "seed", "mode", "fraction", "correction"});
  BootstrapSpec b;
  b.B = t.get<std::size_t>("b", b.B);
  b.level = t.get("level", b.level);
  b.seed = t.get<std::uint64_t>("seed", b.seed);
  b.mode = t.named("mode", b.mode, parse_bootstrap_mode);
  b.fraction = t.get("fraction", b.fraction);
  b.correction = t.get("correction", b.correction);
  return b;
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::sobol_maps: return "sobol-maps";
    case Method::generalized_sobol: return "generalized-sobol";
    case Method::vorobev: return "vorobev";
    case Method::universal: return "universal";
    case Method::hsic: return "hsic";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (auto m : {Method::sobol_maps, Method::generalized_sobol, Method::vorobev, Method::universal, Method::hsic}) {
    if (to_string(m) == name) return m;
  }
  throw ParameterError("unknown method '" + name + "'");
}

int RunConfig::line_of(const std::string& key) const {
  const auto it = lines.find(key);
  return it == lines.end() ? 0 : it->second;
}

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.mark.line + 1, e.msg);
  }
  RunConfig cfg;
  cfg.base_dir = base_dir;
  if (!root || root.IsNull()) throw ConfigError("", 0, "empty configuration");
  Table top(root, "", cfg);
  top.only({"inputs", "model", "grid", "analyses", "bootstrap", "output"});

  const auto inputs = top.raw("inputs");
  if (!inputs || !inputs.IsSequence() || inputs.size() == 0)
    throw ConfigError("inputs", top.line(), "expected a non-empty list of inputs");
  std::set<std::string> names;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Table t(inputs[k], indexed("inputs", k), cfg);
    auto in = parse_input(t);
    if (!names.insert(in.dim.name).second) throw ConfigError(t.join("name"), t.line(), "duplicate input name '" + in.dim.name + "'");
    cfg.inputs.push_back(std::move(in));
  }

  if (!top.has("model")) throw ConfigError("model", top.line(), "missing required key");
  parse_model(Table(top.raw("model"), "model", cfg), cfg);
  if (top.has("grid")) parse_grid(Table(top.raw("grid"), "grid", cfg), cfg);

  const auto analyses = top.raw("analyses");
  if (!analyses || !analyses.IsSequence() || analyses.size() == 0)
    throw ConfigError("analyses", analyses ? line_of(analyses) : top.line(), "at least one analysis is required");
  for (std::size_t k = 0; k < analyses.size(); ++k) {
    cfg.analyses.push_back(parse_analysis(Table(analyses[k], indexed("analyses", k), cfg), cfg));
  }

  if (top.has("bootstrap")) cfg.bootstrap = parse_bootstrap(Table(top.raw("bootstrap"), "bootstrap", cfg));
  if (top.has("output")) {
    Table ot(top.raw("output"), "output", cfg);
    ot.only({"dir"});
    cfg.output_dir = ot.get<std::string>("dir", cfg.output_dir);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  auto dir = std::filesystem::path(path).parent_path().string();
  return parse_config(buf.str(), dir.empty() ? "." : dir);
}

std::string ValidationReport::format() const {
  std::ostringstream out;
  if (issues.empty()) {
    out << "config OK: " << planned_evaluations << " planned model evaluations, ~" << memory_bytes / (1024 * 1024)
        << " MiB peak set storage\n";
  }
  for (const auto& issue : issues) out << ConfigError(issue.key, issue.line, issue.message).what() << "\n";
  return out.str();
}

ValidationReport validate(const RunConfig& config) {
  ValidationReport report;
  auto add = [&](const std::string& key, const std::string& message) {
    report.issues.push_back({key, config.line_of(key), message});
  };
  auto check = [&](const std::string& key, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      add(key, e.what());
    }
  };

  std::size_t free_inputs = 0;
  for (std::size_t k = 0; k < config.inputs.size(); ++k) {
    const auto& in = config.inputs[k];
    const auto key = indexed("inputs", k);
    check(key, [&] { validate(in.dim.dist); });
    if (in.fixed) {
      if (!(*in.fixed >= in.dim.dist.lo && *in.fixed <= in.dim.dist.hi)) add(key + ".fixed", "fixed value outside bounds");
    } else {
      ++free_inputs;
    }
  }
  if (free_inputs == 0) add("inputs", "every input is fixed");

  const auto& g = config.grid;
  check("grid", [&] { validate(g.domain); });
  if (g.nc == 0) add("grid.nc", "nc must be positive");
  else if (g.nc > 65535) add("grid.nc", "nc must be <= 65535");
  if (g.c_bounds && !(g.c_bounds->first < g.c_bounds->second)) add("grid.c_bounds", "need lo < hi");

  if (config.model.kind == ModelKind::external_table) {
    const auto path = std::filesystem::path(config.base_dir) / config.model.path;
    if (!std::filesystem::exists(config.model.path) && !std::filesystem::exists(path))
      add("model.path", "table file not found");
  } else if (config.model.kind == ModelKind::synthetic_separable) {
    if (config.model.separable.terms.empty()) add("model.terms", "at least one term is required");
  }

  if (config.bootstrap) check("bootstrap", [&] { validate(*config.bootstrap); });

  const std::size_t columns = g.domain.n1 * g.domain.n2;
  const std::size_t set_bytes = columns * sizeof(SetSample::Level);
  const std::size_t field_bytes = columns * sizeof(double);
  for (std::size_t k = 0; k < config.analyses.size(); ++k) {
    const auto& a = config.analyses[k];
    const auto key = indexed("analyses", k);
    const bool table = config.model.kind == ModelKind::external_table;
    std::size_t evals = 0;
    std::size_t bytes = 0;
    const std::size_t targets = a.targets.empty() ? free_inputs : a.targets.size();
    switch (a.method) {
      case Method::sobol_maps:
      case Method::generalized_sobol:
        if (a.n < 2) add(key + ".n", "n must be >= 2");
        if (table) add(key + ".method", "pick-and-freeze needs an evaluable model, not an external table");
        evals = a.n * (free_inputs + 2);
        bytes = (a.method == Method::generalized_sobol ? a.n : 0) * field_bytes + (free_inputs + 3) * field_bytes;
        break;
      case Method::vorobev:
        if (a.n_outer < 2 || a.n_inner < 2) add(key + ".n_outer", "n_outer and n_inner must be >= 2");
        if (table) add(key + ".method", "vorobev needs an evaluable model, not an external table");
        evals = a.n_outer * a.n_inner * targets;
        bytes = a.n_outer * a.n_inner * set_bytes;
        break;
      case Method::universal:
        if (a.n < 2) add(key + ".n", "n must be >= 2");
        if (a.n_a < 1) add(key + ".n_a", "n_a must be positive");
        if (a.axis < 1 || a.axis > 3) add(key + ".axis", "axis must be 1, 2 or 3");
        if (a.law) check(key + ".law", [&] { validate(*a.law); });
        evals = a.n;
        bytes = a.n * set_bytes + a.n * a.n_a * sizeof(double);
        break;
      case Method::hsic:
        if (a.n < 10) add(key + ".n", "hsic needs n >= 10");
        if (a.kernel != KernelKind::sobolev1 && !(a.bandwidth > 0.0)) add(key + ".bandwidth", "bandwidth must be positive");
        if (a.sigma2 && !(*a.sigma2 > 0.0)) add(key + ".sigma2", "sigma2 must be positive");
        if (a.pvalue == PValueMethod::gamma && a.b_perm < 20) add(key + ".b_perm", "gamma p-values need b_perm >= 20");
        if (a.b_perm < 1) add(key + ".b_perm", "b_perm must be positive");
        evals = a.n;
        bytes = a.n * set_bytes + (free_inputs + 3) * a.n * a.n * sizeof(double);
        break;
    }
    for (const auto& name : a.targets) {
      for (const auto& in : config.inputs) {
        if (in.dim.name == name && in.fixed) add(key + ".inputs", "input '" + name + "' is fixed");
      }
    }
    report.planned_evaluations += evals;
    report.memory_bytes = std::max(report.memory_bytes, bytes);
  }
  return report;
}

ValidationReport validate_file(const std::string& path) {
  try {
    return validate(load_config(path));
  } catch (const ConfigError& e) {
    ValidationReport report;
    report.issues.push_back({"", 0, e.what()});
    return report;
  }
}

}  // namespace mapgsa
