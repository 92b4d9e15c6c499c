#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "toda/analysis.hpp"
#include "toda/config.hpp"
#include "toda/ensemble.hpp"
#include "toda/error.hpp"
#include "toda/harness.hpp"
#include "toda/quantum.hpp"
#include "toda/version.hpp"

namespace py = pybind11;
using namespace toda;

namespace {

// Curves cross the boundary as (times, values) pairs of float arrays.
py::tuple curve_arrays(const EntropyCurve& c) {
  return py::make_tuple(py::array_t<double>(static_cast<py::ssize_t>(c.times.size()), c.times.data()),
                        py::array_t<double>(static_cast<py::ssize_t>(c.values.size()), c.values.data()));
}

EntropyCurve to_curve(const std::vector<double>& times, const std::vector<double>& values) {
  EntropyCurve c;
  c.times = times;
  c.values = values;
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Entanglement growth in the two-particle Toda model";
  m.attr("__version__") = kCodeVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<double, double, double>(), py::arg("m1") = 1.0, py::arg("m2") = 1.0, py::arg("energy") = 7.0)
      .def_readwrite("m1", &ModelParams::m1)
      .def_readwrite("m2", &ModelParams::m2)
      .def_readwrite("energy", &ModelParams::energy)
      .def("__eq__", [](const ModelParams& a, const ModelParams& b) { return a == b; })
      .def("__repr__", [](const ModelParams& p) {
        return "ModelParams(m1=" + std::to_string(p.m1) + ", m2=" + std::to_string(p.m2) +
               ", energy=" + std::to_string(p.energy) + ")";
      });

  py::class_<PhaseState>(m, "PhaseState")
      .def(py::init<double, double, double, double>(), py::arg("q1") = 0.0, py::arg("q2") = 0.0,
           py::arg("p1") = 0.0, py::arg("p2") = 0.0)
      .def_readwrite("q1", &PhaseState::q1)
      .def_readwrite("q2", &PhaseState::q2)
      .def_readwrite("p1", &PhaseState::p1)
      .def_readwrite("p2", &PhaseState::p2)
      .def("__eq__", [](const PhaseState& a, const PhaseState& b) { return a == b; })
      .def("as_tuple", [](const PhaseState& s) { return py::make_tuple(s.q1, s.q2, s.p1, s.p2); });

  m.def("regular_params", &regular_params, py::arg("energy") = 7.0);
  m.def("chaotic_params", &chaotic_params, py::arg("energy") = 7.0, py::arg("m2") = 0.54);
  m.def("regular_center", &regular_center);
  m.def("chaotic_center", &chaotic_center);
  m.def("potential_energy", &potential_energy, py::arg("q1"), py::arg("q2"));
  m.def("total_energy", &total_energy, py::arg("state"), py::arg("params"));
  m.def("hamiltonian_flow", &hamiltonian_flow);
  m.def("rk4_step", &rk4_step, py::arg("state"), py::arg("dt"), py::arg("params"));

  py::class_<BasisSpec>(m, "BasisSpec")
      .def(py::init<double, double, int, std::optional<int>>(), py::arg("hbar"), py::arg("omega"), py::arg("n_max"),
           py::arg("n_sum_max") = std::nullopt)
      .def_property_readonly("hbar", &BasisSpec::hbar)
      .def_property_readonly("omega", &BasisSpec::omega)
      .def_property_readonly("n_max", &BasisSpec::n_max)
      .def_property_readonly("n_sum_max", &BasisSpec::n_sum_max)
      .def_property_readonly("dimension", &BasisSpec::dimension)
      .def("index", &BasisSpec::index);

  m.def("ho_exp_matrix", &ho_exp_matrix, py::arg("alpha"), py::arg("basis"));
  m.def("build_hamiltonian", &build_hamiltonian, py::arg("params"), py::arg("basis"));
  m.def(
      "entanglement_curve",
      [](const ModelParams& p, const BasisSpec& b, const PhaseState& c, const std::vector<double>& times) {
        py::gil_scoped_release release;
        EntropyCurve curve = entanglement_curve(p, b, c, times);
        py::gil_scoped_acquire acquire;
        return curve_arrays(curve);
      },
      py::arg("params"), py::arg("basis"), py::arg("center"), py::arg("times"));
  m.def(
      "entanglement_entropy",
      [](const BasisSpec& b, const Eigen::VectorXcd& coefficients, int particle) {
        return von_neumann_entropy(reduced_density(b, coefficients, particle));
      },
      py::arg("basis"), py::arg("coefficients"), py::arg("particle") = 1);

  m.def(
      "cell_entropy",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& points, double delta) {
        if (points.ndim() != 2 || points.shape(1) != 2) throw ConfigError("points must have shape (n, 2)");
        const auto view = points.unchecked<2>();
        std::vector<Point2> pts(static_cast<std::size_t>(view.shape(0)));
        for (py::ssize_t i = 0; i < view.shape(0); ++i) pts[static_cast<std::size_t>(i)] = {view(i, 0), view(i, 1)};
        return cell_entropy(pts, CellPartition{delta, {0.0, 0.0}});
      },
      py::arg("points"), py::arg("delta"));
  m.def(
      "classical_entropy_curve",
      [](const ModelParams& p, const PhaseState& c, double hbar, double delta, std::size_t M, std::uint64_t seed,
         const std::vector<double>& times, double dt) {
        ClassicalRun run;
        run.params = p;
        run.center = c;
        run.hbar = hbar;
        run.delta = delta;
        run.M = M;
        run.seed = seed;
        run.evolve.dt = dt;
        ClassicalCurves curves;
        {
          py::gil_scoped_release release;
          curves = classical_entropy_curve(run, times);
        }
        return py::make_tuple(curve_arrays(curves.particle1), curve_arrays(curves.particle2));
      },
      py::arg("params"), py::arg("center"), py::arg("hbar"), py::arg("delta"), py::arg("M"), py::arg("seed"),
      py::arg("times"), py::arg("dt") = 1e-3);

  m.def(
      "fit_growth",
      [](const std::vector<double>& times, const std::vector<double>& values, const std::string& model, double t_min,
         double t_max) {
        const GrowthFit f = fit_growth(to_curve(times, values), parse_growth_model(model), {t_min, t_max});
        return py::dict(py::arg("a") = f.a, py::arg("b") = f.b, py::arg("r_squared") = f.r_squared);
      },
      py::arg("times"), py::arg("values"), py::arg("model"), py::arg("t_min"), py::arg("t_max"));
  m.def(
      "saturation_value",
      [](const std::vector<double>& times, const std::vector<double>& values, double tail_fraction) {
        return saturation_value(to_curve(times, values), tail_fraction).mean;
      },
      py::arg("times"), py::arg("values"), py::arg("tail_fraction") = 0.2);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def("set", &ExperimentConfig::set, py::arg("key"), py::arg("value"))
      .def("validate", &ExperimentConfig::validate)
      .def("serialize", &ExperimentConfig::serialize)
      .def_readwrite("output_dir", &ExperimentConfig::output_dir)
      .def_readwrite("cache_dir", &ExperimentConfig::cache_dir);
  m.def("parse_config", &parse_config);
  m.def("load_config", &load_config);
  m.def("config_keys", &config_keys);

  m.def(
      "run_experiment",
      [](const ExperimentConfig& config) {
        RunReport r;
        {
          py::gil_scoped_release release;
          r = run_experiment(config);
        }
        py::list failed;
        for (const CellOutcome& c : r.cells) {
          if (!c.ok()) failed.append(py::make_tuple(c.name, c.message));
        }
        return py::dict(py::arg("directory") = r.directory.string(), py::arg("exit_code") = r.exit_code(),
                        py::arg("cells") = r.cells.size(), py::arg("failed") = failed);
      },
      py::arg("config"));
}
