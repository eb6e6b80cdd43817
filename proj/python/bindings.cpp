#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "conederiv/errors.hpp"
#include "conederiv/estimators.hpp"
#include "conederiv/fixtures.hpp"
#include "conederiv/json_io.hpp"
#include "conederiv/paths.hpp"
#include "conederiv/report.hpp"

namespace py = pybind11;
using namespace conederiv;

namespace {

// Structured values cross the boundary as JSON text; the Python package decodes them.
ScaleSchedule schedule_arg(const std::string& text) {
  return text.empty() ? ScaleSchedule{} : schedule_from_json(Json::parse(text));
}

EstimatorOptions options_arg(const std::string& text) {
  return text.empty() ? EstimatorOptions{} : options_from_json(Json::parse(text));
}

DerivativeEstimate run_estimator(const BlackBoxFn& f, const Vec& a, const Subspace& v, const std::string& estimator,
                                 const ScaleSchedule& sched, const EstimatorOptions& opts) {
  if (estimator == "tangential") return estimate_tangential(f, a, v, sched, opts);
  if (estimator == "directional") return estimate_directional(f, a, v, sched, opts);
  throw std::invalid_argument("estimator must be 'tangential' or 'directional'");
}

// Wraps a Python callable R^m -> R^n. Evaluation stays on the calling thread, which holds the GIL.
BlackBoxFn python_fn(py::function fn, int m, int n) {
  BlackBoxFn f;
  f.m = m;
  f.n = n;
  f.eval = [fn = std::move(fn), n](const Vec& x) -> Vec {
    Vec y = fn(x).cast<Vec>();
    if (y.size() != n) throw DimensionMismatch("callable returned a vector of the wrong length");
    return y;
  };
  return f;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Sampling-based directional and tangential derivative tests";
  mod.attr("__version__") = kVersion;

  py::register_exception<UnknownFixture>(mod, "UnknownFixture", PyExc_KeyError);
  py::register_exception<InsufficientSamples>(mod, "InsufficientSamples", PyExc_RuntimeError);
  py::register_exception<ConfigError>(mod, "ConfigError", PyExc_ValueError);

  mod.def("fixture_names", [] {
    std::vector<std::string> names;
    for (const Fixture& fx : catalog()) names.push_back(fx.name);
    return names;
  });
  mod.def("chain_case_names", [] {
    std::vector<std::string> names;
    for (const ChainCase& c : chain_catalog()) names.push_back(c.name);
    return names;
  });
  mod.def("fixture_info", [](const std::string& name) {
    const Fixture fx = find_fixture(name);
    Json j{{"name", fx.name},
           {"role", fx.role},
           {"m", fx.f.m},
           {"n", fx.f.n},
           {"base_point", vec_to_json(fx.base_point)},
           {"subspace", subspace_to_json(fx.subspace)},
           {"params", fx.params}};
    if (fx.expected.tangential) j["expected_tangential"] = to_string(*fx.expected.tangential);
    if (fx.expected.directional) j["expected_directional"] = to_string(*fx.expected.directional);
    return j.dump();
  });
  mod.def("fixture_eval", [](const std::string& name, const Vec& x) { return find_fixture(name).f(x); });

  mod.def(
      "estimate_fixture",
      [](const std::string& name, const std::string& estimator, const std::string& schedule,
         const std::string& options) {
        const Fixture fx = find_fixture(name);
        return estimate_to_json(
                   run_estimator(fx.f, fx.base_point, fx.subspace, estimator, schedule_arg(schedule), options_arg(options)))
            .dump();
      },
      py::arg("name"), py::arg("estimator") = "tangential", py::arg("schedule") = "", py::arg("options") = "");

  mod.def(
      "estimate_callable",
      [](py::function fn, int m, int n, const Vec& a, const Matrix& basis, const std::string& estimator,
         const std::string& schedule, const std::string& options) {
        EstimatorOptions opts = options_arg(options);
        opts.threads = 1;
        const Subspace v = basis.cols() == 0 ? Subspace::zero(m) : Subspace(basis);
        return estimate_to_json(run_estimator(python_fn(std::move(fn), m, n), a, v, estimator, schedule_arg(schedule), opts))
            .dump();
      },
      py::arg("fn"), py::arg("m"), py::arg("n"), py::arg("a"), py::arg("basis"), py::arg("estimator") = "tangential",
      py::arg("schedule") = "", py::arg("options") = "");

  mod.def(
      "cone_growth_fixture",
      [](const std::string& name, const std::string& schedule, const std::string& options) {
        const Fixture fx = find_fixture(name);
        return cone_growth_to_json(
                   cone_growth(fx.f, fx.base_point, fx.subspace, schedule_arg(schedule), options_arg(options)))
            .dump();
      },
      py::arg("name"), py::arg("schedule") = "", py::arg("options") = "");

  mod.def(
      "compose_case",
      [](const std::string& name, const std::string& schedule, const std::string& options) {
        const ChainCase c = find_chain_case(name);
        return compose_to_json(
                   compose_and_check(c.f, c.g, c.base_point, c.subspace, schedule_arg(schedule), options_arg(options)))
            .dump();
      },
      py::arg("name"), py::arg("schedule") = "", py::arg("options") = "");

  py::class_<PiecewisePath>(mod, "Path")
      .def_property_readonly("base", &PiecewisePath::base)
      .def_property_readonly("velocity", &PiecewisePath::velocity)
      .def_property_readonly("knots_t", &PiecewisePath::knots_t)
      .def_property_readonly("knots_x", &PiecewisePath::knots_x)
      .def_property_readonly("ratio_bound", &PiecewisePath::ratio_bound)
      .def_property_readonly("t_max", &PiecewisePath::t_max)
      .def("eval", &interp_eval, py::arg("t"))
      .def("deriv", &interp_deriv, py::arg("t"))
      .def("to_json", [](const PiecewisePath& p) { return path_to_json(p).dump(); })
      .def("table_csv", &path_table_csv, py::arg("samples") = 101);

  mod.def("build_path", &build_path, py::arg("a"), py::arg("knots_t"), py::arg("knots_x"), py::arg("v"));
  mod.def(
      "pullback_fixture",
      [](const std::string& name, const PiecewisePath& p, const Matrix& l, const std::string& schedule,
         const std::string& options) {
        const Fixture fx = find_fixture(name);
        return pullback_to_json(
                   pullback_test(fx.f, p, LinearMap(fx.subspace, l), schedule_arg(schedule), options_arg(options)))
            .dump();
      },
      py::arg("name"), py::arg("path"), py::arg("L"), py::arg("schedule") = "", py::arg("options") = "");

  mod.def(
      "run_suite",
      [](const std::string& config, int workers, bool wall_clock) {
        const SuiteConfig cfg = parse_config(Json::parse(config));
        SuiteReport report;
        {
          py::gil_scoped_release release;
          report = run_suite(cfg, workers);
        }
        return report_to_json(report, wall_clock).dump();
      },
      py::arg("config"), py::arg("workers") = 1, py::arg("wall_clock") = true);
}
