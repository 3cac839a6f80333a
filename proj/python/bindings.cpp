#include "mapgsa/config.hpp"
#include "mapgsa/errors.hpp"
#include "mapgsa/hsic.hpp"
#include "mapgsa/parallel.hpp"
#include "mapgsa/resample.hpp"
#include "mapgsa/runner.hpp"
#include "mapgsa/universal.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

namespace py = pybind11;
using namespace mapgsa;

namespace {

py::dict estimate_dict(const IndexEstimate& e) {
  py::dict d;
  d["input"] = e.input;
  d["method"] = e.method;
  d["estimate"] = e.estimate;
  d["ci"] = e.has_ci ? py::object(py::make_tuple(e.ci_lo, e.ci_hi)) : py::object(py::none());
  d["n"] = e.n;
  d["B"] = e.B;
  d["seed"] = e.seed;
  d["extra"] = e.extra;
  return d;
}

py::dict run_config(const std::string& path, std::optional<std::string> output_dir, bool verbose) {
  RunConfig config = load_config(path);
  if (output_dir) config.output_dir = *output_dir;
  std::ostringstream log;
  RunResult r;
  {
    py::gil_scoped_release release;
    r = run(config, verbose ? &log : nullptr);
  }
  py::list analyses;
  for (const auto& a : r.analyses) {
    py::dict d;
    d["method"] = a.method;
    d["status"] = a.status;
    d["message"] = a.message;
    d["evaluations"] = a.evaluations;
    py::list indices;
    for (const auto& e : a.indices) indices.append(estimate_dict(e));
    d["indices"] = indices;
    analyses.append(d);
  }
  py::dict out;
  out["exit_code"] = r.exit_code;
  out["output_dir"] = config.output_dir;
  out["analyses"] = analyses;
  if (verbose) out["log"] = log.str();
  return out;
}

py::dict validate_config(const std::string& path) {
  const ValidationReport r = validate_file(path);
  py::list issues;
  for (const auto& i : r.issues) issues.append(py::make_tuple(i.key, i.line, i.message));
  py::dict out;
  out["ok"] = r.ok();
  out["issues"] = issues;
  out["planned_evaluations"] = r.planned_evaluations;
  out["memory_bytes"] = r.memory_bytes;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sensitivity analysis for map-valued and set-valued model outputs";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<DegenerateError>(m, "DegenerateError", PyExc_ArithmeticError);

  m.def("run", &run_config, py::arg("path"), py::arg("output_dir") = py::none(), py::arg("verbose") = false,
        "Run every analysis of a YAML config and write its output files.");
  m.def("validate", &validate_config, py::arg("path"), "Dry-run validation of a YAML config.");
  m.def("set_num_threads", &set_num_threads, py::arg("n"));
  m.def("num_threads", &num_threads);

  m.def(
      "hsic_ustat",
      [](const Eigen::MatrixXd& A, const Eigen::MatrixXd& L) { return hsic_ustat(A, L); }, py::arg("A"),
      py::arg("L"), "U-statistic over off-diagonal pairs of two Gram matrices.");
  m.def(
      "universal_ratio",
      [](const std::vector<double>& u, const Matrix& distances) {
        const auto r = universal_ratio(u, distances);
        return py::make_tuple(r.numerator, r.denominator);
      },
      py::arg("u"), py::arg("distances"), "Rank-based numerator and denominator, one column per test set.");
  m.def(
      "quantile", [](std::vector<double> v, double prob) { return quantile(std::move(v), prob); }, py::arg("values"),
      py::arg("prob"));
}
