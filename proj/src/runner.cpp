#include "mapgsa/runner.hpp"

#include "mapgsa/errors.hpp"
#include "mapgsa/hsic.hpp"
#include "mapgsa/rng.hpp"
#include "mapgsa/sobol_map.hpp"
#include "mapgsa/universal.hpp"
#include "mapgsa/vorobev.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace mapgsa {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct PValueRow {
  std::string input;
  std::string kernel;
  std::string method;
  double hsic = 0.0;
  double pvalue = 0.0;
  double pvalue_sd = 0.0;
  bool has_sd = false;
  std::size_t n = 0;
  std::size_t b_perm = 0;
  std::uint64_t seed = 0;
};

struct MapOutput {
  fs::path dir;
  SobolMapResult result;
  std::uint64_t seed = 0;
  std::string generator;
};

/// Everything one analysis needs from the run.
struct Context {
  const RunConfig& config;
  ModelPtr model;
  std::shared_ptr<const TableModel> table;
  LevelGrid levels;
  std::vector<PValueRow> pvalues;
  std::vector<MapOutput> maps;
  std::size_t sobol_map_runs = 0;
};

std::string kv(const std::string& key, double v) { return key + "=" + format_number(v); }
std::string kv(const std::string& key, std::size_t v) { return key + "=" + std::to_string(v); }
std::string kv(const std::string& key, const std::string& v) { return key + "=" + v; }

std::string join_extra(std::initializer_list<std::string> parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ';';
    out += p;
  }
  return out;
}

std::vector<std::size_t> target_indices(const AnalysisConfig& a, const InputSpace& space) {
  std::vector<std::size_t> out;
  if (a.targets.empty()) {
    for (std::size_t i = 0; i < space.size(); ++i) out.push_back(i);
  } else {
    for (const auto& name : a.targets) out.push_back(space.index_of(name));
  }
  return out;
}

std::optional<BootstrapSpec> bootstrap_for(const Context& ctx, const AnalysisConfig& a) {
  if (!ctx.config.bootstrap || !a.bootstrap) return std::nullopt;
  return ctx.config.bootstrap;
}

/// Input sample and lifted sets for the single-sample estimators. External
/// tables use their stored rows (the first n) instead of new evaluations.
std::pair<Matrix, std::vector<SetSample>> single_sample(Context& ctx, const AnalysisConfig& a) {
  if (ctx.table) {
    const auto& recs = ctx.table->data().records;
    if (a.n > recs.size()) throw ParameterError("n exceeds the number of table rows");
    const Matrix all = ctx.table->stored_inputs();
    // Keep the free columns only.
    std::vector<Eigen::Index> cols;
    for (std::size_t k = 0; k < ctx.config.inputs.size(); ++k) {
      if (!ctx.config.inputs[k].fixed) cols.push_back(static_cast<Eigen::Index>(k));
    }
    Matrix inputs(static_cast<Eigen::Index>(a.n), static_cast<Eigen::Index>(cols.size()));
    std::vector<SetSample> sets;
    for (std::size_t r = 0; r < a.n; ++r) {
      for (std::size_t c = 0; c < cols.size(); ++c) {
        inputs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = all(static_cast<Eigen::Index>(r), cols[c]);
      }
      sets.push_back(lift_hypograph(MapField{ctx.table->grid(), recs[r].field}, ctx.levels));
    }
    return {std::move(inputs), std::move(sets)};
  }
  Matrix inputs = monte_carlo(ctx.model->inputs(), a.n, derive_seed(a.seed, {0}));
  auto sets = lift_all(*ctx.model, ctx.levels, inputs);
  return {std::move(inputs), std::move(sets)};
}

void require_evaluable(const Context& ctx, const AnalysisConfig& a) {
  if (ctx.table) throw ParameterError(to_string(a.method) + " needs an evaluable model, not an external table");
}

void run_sobol_maps(Context& ctx, const AnalysisConfig& a, AnalysisOutcome& out) {
  require_evaluable(ctx, a);
  const auto design = pick_freeze(ctx.model->inputs(), a.n, a.seed, a.generator);
  auto r = sobol_maps(*ctx.model, design);
  for (auto i : target_indices(a, ctx.model->inputs())) {
    IndexEstimate e;
    e.input = r.inputs[i];
    e.method = "sobol-maps";
    e.estimate = generalized_index(r, i);
    e.n = a.n;
    e.seed = a.seed;
    e.extra = join_extra({kv("degenerate_cells", r.degenerate_cells), kv("evaluations", r.evaluations)});
    out.indices.push_back(std::move(e));
  }
  fs::path dir = fs::path(ctx.config.output_dir) / "maps";
  if (ctx.sobol_map_runs++ > 0) dir /= "analysis" + std::to_string(&a - ctx.config.analyses.data());
  ctx.maps.push_back({dir, std::move(r), a.seed, to_string(a.generator)});
}

void run_generalized(Context& ctx, const AnalysisConfig& a, AnalysisOutcome& out) {
  require_evaluable(ctx, a);
  const auto design = pick_freeze(ctx.model->inputs(), a.n, a.seed, a.generator);
  const auto boot = bootstrap_for(ctx, a);
  auto all = generalized_sobol(*ctx.model, design, boot);
  for (auto i : target_indices(a, ctx.model->inputs())) {
    auto e = all[i];
    e.seed = a.seed;
    e.extra = join_extra({kv("evaluations", design.evaluations()), kv("generator", to_string(a.generator))});
    out.indices.push_back(std::move(e));
  }
}

void run_vorobev(Context& ctx, const AnalysisConfig& a, AnalysisOutcome& out) {
  require_evaluable(ctx, a);
  const auto boot = bootstrap_for(ctx, a);
  for (auto i : target_indices(a, ctx.model->inputs())) {
    const auto v = vorobev_index(*ctx.model, ctx.levels, i, a.n_outer, a.n_inner, a.seed, boot);
    IndexEstimate e;
    e.input = ctx.model->inputs().dim(i).name;
    e.method = "vorobev";
    e.estimate = v.estimate;
    e.ci_lo = v.ci_lo;
    e.ci_hi = v.ci_hi;
    e.has_ci = v.has_ci;
    e.n = a.n_outer * a.n_inner;
    e.B = v.B;
    e.seed = a.seed;
    e.extra = join_extra({kv("n_outer", a.n_outer), kv("n_inner", a.n_inner), kv("vmd", v.vmd),
                          kv("conditional_deviation", v.conditional_deviation), kv("evaluations", v.evaluations)});
    out.indices.push_back(std::move(e));
  }
}

void run_universal(Context& ctx, const AnalysisConfig& a, AnalysisOutcome& out) {
  auto [inputs, sets] = single_sample(ctx, a);
  std::optional<CoverageField> cov;
  if (a.family == FamilyKind::vorobev_quantiles) cov = coverage(sets);
  const auto family = make_family(a.family, a.law, std::move(cov), a.axis);
  auto boot = bootstrap_for(ctx, a);
  if (boot) boot->mode = BootstrapMode::subsample;
  const auto& space = ctx.model->inputs();
  std::vector<std::string> names;
  for (const auto& d : space.dims()) names.push_back(d.name);
  const auto all = universal_indices(inputs, sets, family, a.n_a, derive_seed(a.seed, {1}), boot, names);
  for (auto i : target_indices(a, space)) {
    const auto& u = all[i];
    IndexEstimate e;
    e.input = u.input;
    e.method = "universal";
    e.estimate = u.estimate;
    e.ci_lo = u.ci_lo;
    e.ci_hi = u.ci_hi;
    e.has_ci = u.has_ci;
    e.n = a.n;
    e.B = u.B;
    e.seed = a.seed;
    e.extra = join_extra({kv("family", u.family), kv("N_a", u.N_a), kv("numerator", u.numerator),
                          kv("denominator", u.denominator)});
    out.indices.push_back(std::move(e));
  }
}

void run_hsic(Context& ctx, const AnalysisConfig& a, AnalysisOutcome& out) {
  auto [inputs, sets] = single_sample(ctx, a);
  const auto& space = ctx.model->inputs();
  const Matrix unit = space.rescale_to_unit(inputs);
  const InputKernelSpec kernel{a.kernel, a.bandwidth, 64};
  const HsicAnalysis analysis(unit, sets, {kernel}, a.sigma2);
  const auto boot = bootstrap_for(ctx, a);
  for (auto i : target_indices(a, space)) {
    const auto h = analysis.estimate(i, boot, a.pvalue, a.b_perm, a.seed);
    IndexEstimate e;
    e.input = space.dim(i).name;
    e.method = "hsic";
    e.estimate = h.index;
    e.ci_lo = h.ci_lo;
    e.ci_hi = h.ci_hi;
    e.has_ci = h.has_ci;
    e.n = a.n;
    e.B = h.has_ci ? boot->B : 0;
    e.seed = a.seed;
    e.extra = join_extra({kv("kernel", h.kernel), kv("hsic", h.hsic), kv("hsic_total", h.hsic_total),
                          kv("sigma2", h.sigma2), kv("pvalue", h.pvalue)});
    ctx.pvalues.push_back({e.input, h.kernel, to_string(a.pvalue), h.hsic, h.pvalue, h.pvalue_sd, h.has_ci, a.n,
                           a.b_perm, a.seed});
    out.indices.push_back(std::move(e));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

std::string csv_optional(bool has, double v) { return has ? format_number(v) : std::string(); }

void write_map(const fs::path& path, const DomainGrid& g, const std::string& header, const std::vector<double>& values) {
  std::ostringstream s;
  s << "# grid x1=[" << format_number(g.x1_lo) << "," << format_number(g.x1_hi) << "] n1=" << g.n1 << " x2=["
    << format_number(g.x2_lo) << "," << format_number(g.x2_hi) << "] n2=" << g.n2 << " rows=x1 cols=x2\n";
  s << "# " << header << "\n";
  for (std::size_t k1 = 0; k1 < g.n1; ++k1) {
    for (std::size_t k2 = 0; k2 < g.n2; ++k2) {
      const std::size_t c = k1 * g.n2 + k2;
      if (k2) s << ',';
      s << format_number(values[c]);
    }
    s << '\n';
  }
  write_text(path, s.str());
}

void write_outputs(const Context& ctx, const RunResult& result) {
  const fs::path dir(ctx.config.output_dir);
  fs::create_directories(dir);

  std::ostringstream idx;
  idx << "input,method,estimate,ci_lo,ci_hi,n,B,seed,extra\n";
  for (const auto& a : result.analyses) {
    for (const auto& e : a.indices) {
      idx << e.input << ',' << e.method << ',' << format_number(e.estimate) << ',' << csv_optional(e.has_ci, e.ci_lo)
          << ',' << csv_optional(e.has_ci, e.ci_hi) << ',' << e.n << ',' << e.B << ',' << e.seed << ',' << e.extra
          << '\n';
    }
  }
  write_text(dir / "indices.csv", idx.str());

  if (!ctx.pvalues.empty()) {
    std::ostringstream pv;
    pv << "input,kernel,method,hsic,pvalue,pvalue_sd,n,B_perm,seed\n";
    for (const auto& r : ctx.pvalues) {
      pv << r.input << ',' << r.kernel << ',' << r.method << ',' << format_number(r.hsic) << ','
         << format_number(r.pvalue) << ',' << csv_optional(r.has_sd, r.pvalue_sd) << ',' << r.n << ',' << r.b_perm
         << ',' << r.seed << '\n';
    }
    write_text(dir / "pvalues.csv", pv.str());
  }

  for (const auto& m : ctx.maps) {
    fs::create_directories(m.dir);
    const auto& r = m.result;
    const std::string common = "n=" + std::to_string(r.n) + " degenerate_cells=" + std::to_string(r.degenerate_cells) + " seed=" + std::to_string(m.seed) + " generator=" + m.generator;
    for (std::size_t i = 0; i < r.inputs.size(); ++i) {
      write_map(m.dir / ("S_" + r.inputs[i] + ".csv"), r.grid, "method=sobol-maps input=" + r.inputs[i] + " " + common,
                r.index_maps[i]);
    }
    write_map(m.dir / "variance.csv", r.grid, "method=sobol-maps quantity=variance " + common, r.variance);
  }

  Json summary;
  summary["exit_code"] = result.exit_code;
  Json inputs = Json::array();
  for (const auto& in : ctx.config.inputs) {
    Json j;
    j["name"] = in.dim.name;
    j["dist"] = to_string(in.dim.dist.kind);
    j["bounds"] = {in.dim.dist.lo, in.dim.dist.hi};
    if (in.fixed) j["fixed"] = *in.fixed;
    inputs.push_back(j);
  }
  summary["inputs"] = inputs;
  summary["model"] = to_string(ctx.config.model.kind);
  const auto& g = ctx.config.grid.domain;
  summary["grid"] = {{"n1", g.n1}, {"n2", g.n2}, {"nc", result.levels.nc},
                     {"x1", {g.x1_lo, g.x1_hi}}, {"x2", {g.x2_lo, g.x2_hi}},
                     {"c", {result.levels.c_min, result.levels.c_max}},
                     {"c_bounds", ctx.config.grid.c_bounds ? "config" : "auto"}};
  if (ctx.config.bootstrap) {
    const auto& b = *ctx.config.bootstrap;
    summary["bootstrap"] = {{"B", b.B}, {"level", b.level}, {"seed", b.seed}, {"mode", to_string(b.mode)},
                            {"fraction", b.fraction}, {"correction", b.correction}};
  }
  Json analyses = Json::array();
  for (std::size_t k = 0; k < result.analyses.size(); ++k) {
    const auto& a = result.analyses[k];
    const auto& cfg = ctx.config.analyses[k];
    Json j;
    j["method"] = a.method;
    j["status"] = a.status;
    if (!a.message.empty()) j["message"] = a.message;
    j["n"] = cfg.n;
    j["seed"] = cfg.seed;
    j["evaluations"] = a.evaluations;
    Json rows = Json::array();
    for (const auto& e : a.indices) {
      Json r;
      r["input"] = e.input;
      r["estimate"] = e.estimate;
      if (e.has_ci) r["ci"] = {e.ci_lo, e.ci_hi};
      rows.push_back(r);
    }
    j["indices"] = rows;
    analyses.push_back(j);
  }
  summary["analyses"] = analyses;
  write_text(dir / "summary.json", summary.dump(2) + "\n");
}

ModelPtr build_base(const RunConfig& config) {
  std::vector<InputDim> dims;
  for (const auto& in : config.inputs) dims.push_back(in.dim);
  InputSpace space(dims);
  const auto& m = config.model;
  try {
    switch (m.kind) {
      case ModelKind::synthetic_separable: return make_synthetic(m.kind, m.separable, space, config.grid.domain);
      case ModelKind::synthetic_plume: return make_synthetic(m.kind, m.plume, space, config.grid.domain);
      case ModelKind::external_table: {
        fs::path path(m.path);
        if (path.is_relative() && !fs::exists(path)) path = fs::path(config.base_dir) / path;
        return std::make_shared<TableModel>(space, config.grid.domain, load_table(path.string()));
      }
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("model", config.line_of("model"), e.what());
  }
  throw ConfigError("model.kind", config.line_of("model.kind"), "unsupported model kind");
}

ModelPtr freeze_inputs(ModelPtr base, const RunConfig& config) {
  std::vector<std::optional<double>> fixed;
  for (const auto& in : config.inputs) fixed.push_back(in.fixed);
  if (std::none_of(fixed.begin(), fixed.end(), [](const auto& f) { return f.has_value(); })) return base;
  return std::make_shared<FrozenModel>(std::move(base), std::move(fixed));
}

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ModelPtr build_model(const RunConfig& config) { return freeze_inputs(build_base(config), config); }

LevelGrid build_levels(const RunConfig& config, const MapModel& model) {
  if (config.grid.c_bounds) {
    LevelGrid levels{config.grid.c_bounds->first, config.grid.c_bounds->second, config.grid.nc};
    validate(levels);
    return levels;
  }
  return auto_levels(model, config.grid.nc, config.grid.pilot_seed);
}

RunResult run(const RunConfig& config, std::ostream* log) {
  {
    const auto report = validate(config);
    if (!report.ok()) {
      const auto& first = report.issues.front();
      throw ConfigError(first.key, first.line, first.message);
    }
  }
  const ModelPtr base = build_base(config);
  Context ctx{config, freeze_inputs(base, config), std::dynamic_pointer_cast<const TableModel>(base), {}, {}, {}, 0};
  RunResult result;
  // Table levels come from stored fields, never from new evaluations.
  const MapModel& level_source = ctx.table ? static_cast<const MapModel&>(*ctx.table) : *ctx.model;
  ctx.levels = build_levels(config, level_source);
  result.levels = ctx.levels;

  for (const auto& a : config.analyses) {
    AnalysisOutcome out;
    out.method = to_string(a.method);
    ctx.model->reset_evaluations();
    if (log) *log << "[" << out.method << "] running\n";
    try {
      switch (a.method) {
        case Method::sobol_maps: run_sobol_maps(ctx, a, out); break;
        case Method::generalized_sobol: run_generalized(ctx, a, out); break;
        case Method::vorobev: run_vorobev(ctx, a, out); break;
        case Method::universal: run_universal(ctx, a, out); break;
        case Method::hsic: run_hsic(ctx, a, out); break;
      }
    } catch (const DegenerateError& e) {
      out.status = "degenerate";
      out.message = e.what();
      out.indices.clear();
      result.exit_code = std::max<int>(result.exit_code, exit_degenerate);
    } catch (const std::invalid_argument& e) {
      out.status = "error";
      out.message = e.what();
      out.indices.clear();
      result.exit_code = std::max<int>(result.exit_code, exit_config);
    } catch (const std::domain_error& e) {
      out.status = "error";
      out.message = e.what();
      out.indices.clear();
      result.exit_code = std::max<int>(result.exit_code, exit_config);
    }
    const bool from_table = ctx.table && (a.method == Method::universal || a.method == Method::hsic);
    out.evaluations = from_table ? (out.status == "ok" ? a.n : 0) : ctx.model->evaluations();
    if (log) {
      *log << "[" << out.method << "] " << out.status;
      if (!out.message.empty()) *log << ": " << out.message;
      *log << " (" << out.evaluations << " evaluations)\n";
    }
    result.analyses.push_back(std::move(out));
  }
  write_outputs(ctx, result);
  return result;
}

}  // namespace mapgsa
