#include "volvar/brakke.hpp"
#include "volvar/discretization.hpp"
#include "volvar/experiment.hpp"
#include "volvar/metrics.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace volvar;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<Vec> to_points(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) < 1 || a.shape(1) > kMaxAmbient) {
    throw InvalidArgument("points must be a (k, n) array with 1 <= n <= 3");
  }
  const auto r = a.unchecked<2>();
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(a.shape(0)));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    Vec v(a.shape(1));
    for (py::ssize_t j = 0; j < a.shape(1); ++j) v(j) = r(i, j);
    out.push_back(v);
  }
  return out;
}

Vec to_vec(const Array& a) {
  if (a.ndim() != 1 || a.shape(0) < 1 || a.shape(0) > kMaxAmbient) {
    throw InvalidArgument("point must be a 1-d array of length 1..3");
  }
  Vec v(a.shape(0));
  for (py::ssize_t j = 0; j < a.shape(0); ++j) v(j) = a.at(j);
  return v;
}

py::array_t<double> from_vec(const Vec& v) {
  py::array_t<double> out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out.mutable_at(i) = v(i);
  return out;
}

AtomicMeasure to_measure(const Array& x, const Array& m) {
  const auto pts = to_points(x);
  if (m.ndim() != 1 || static_cast<std::size_t>(m.shape(0)) != pts.size()) {
    throw InvalidArgument("masses must be a 1-d array matching the points");
  }
  std::vector<MeasureAtom> atoms;
  for (std::size_t i = 0; i < pts.size(); ++i) atoms.push_back({pts[i], m.at(i)});
  return AtomicMeasure(std::move(atoms));
}

py::dict ledger_dict(const ConstantsLedger& L) {
  py::dict d;
  const auto& in = L.inputs;
  d["d"] = in.d;
  d["C0"] = in.c0;
  d["C1"] = in.c1;
  d["C2"] = in.c2;
  d["gamma"] = in.gamma;
  d["beta"] = in.beta;
  d["lambda_max"] = in.lambda_max;
  d["mass0"] = in.mass0;
  d["T"] = in.horizon;
  d["phi_c1"] = in.phi_c1;
  d["c3"] = L.c3;
  d["c4"] = L.c4;
  d["c5"] = L.c5;
  d["c6"] = L.c6;
  d["c7"] = L.c7;
  d["c8"] = L.c8;
  d["c9"] = L.c9;
  d["c10"] = L.c10;
  d["C"] = L.big_c;
  d["C_prime"] = L.big_c_prime;
  return d;
}

ExperimentConfig config_from_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Varifold discretization, approximate mean curvature and Brakke residuals";

  static py::exception<Error> error(m, "Error");
  static py::exception<InvalidArgument> invalid(m, "InvalidArgument", error.ptr());
  static py::exception<ConfigError> config(m, "ConfigError", error.ptr());
  static py::exception<PreconditionViolated> precondition(m, "PreconditionViolated", error.ptr());
  static py::exception<DenominatorTooSmall> denominator(m, "DenominatorTooSmall", error.ptr());
  static py::exception<NumericalFailure> numerical(m, "NumericalFailure", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(config.ptr(), e.what());
    } catch (const InvalidArgument& e) {
      PyErr_SetString(invalid.ptr(), e.what());
    } catch (const PreconditionViolated& e) {
      PyErr_SetString(precondition.ptr(), e.what());
    } catch (const DenominatorTooSmall& e) {
      PyErr_SetString(denominator.ptr(), e.what());
    } catch (const NumericalFailure& e) {
      PyErr_SetString(numerical.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  py::class_<AnalyticShape>(m, "Shape")
      .def_static("circle", [](double r) { return AnalyticShape::circle(r); }, py::arg("radius") = 1.0)
      .def_static("ellipse", [](double a, double b) { return AnalyticShape::ellipse(a, b); },
                  py::arg("a"), py::arg("b"))
      .def_static("sphere", [](double r) { return AnalyticShape::sphere(r); }, py::arg("radius") = 1.0)
      .def_static("torus", [](double R, double r) { return AnalyticShape::torus(R, r); },
                  py::arg("major"), py::arg("minor"))
      .def_static("from_config", &AnalyticShape::from_config, py::arg("name"), py::arg("params"))
      .def_property_readonly("name", &AnalyticShape::name)
      .def_property_readonly("dim", &AnalyticShape::dim)
      .def_property_readonly("ambient", &AnalyticShape::ambient)
      .def("total_measure", &AnalyticShape::total_measure)
      .def("max_principal_curvature", &AnalyticShape::max_principal_curvature)
      .def("mean_curvature", [](const AnalyticShape& s, const Array& y) {
        return from_vec(exact_mean_curvature(s, to_vec(y)));
      })
      .def("probe_points", [](const AnalyticShape& s, int count) {
        const auto pts = shape_probe_points(s, count);
        py::array_t<double> out({static_cast<py::ssize_t>(pts.size()),
                                 static_cast<py::ssize_t>(s.ambient())});
        auto w = out.mutable_unchecked<2>();
        for (std::size_t i = 0; i < pts.size(); ++i) {
          for (int j = 0; j < s.ambient(); ++j) w(i, j) = pts[i](j);
        }
        return out;
      })
      .def("__repr__", [](const AnalyticShape& s) { return "<Shape " + s.name() + ">"; });

  py::class_<KernelPair>(m, "KernelPair")
      .def_static("natural", &KernelPair::natural, py::arg("n"), py::arg("d"), py::arg("exponent") = 4)
      .def_static("independent", &KernelPair::independent, py::arg("n"), py::arg("d"),
                  py::arg("exponent") = 4)
      .def_property_readonly("c_rho", &KernelPair::c_rho)
      .def_property_readonly("c_xi", &KernelPair::c_xi)
      .def_property_readonly("lip_xi", &KernelPair::lip_xi)
      .def_property_readonly("is_natural", &KernelPair::is_natural)
      .def("beta", &KernelPair::beta, py::arg("c0"))
      .def("natural_relation_error", &KernelPair::natural_relation_error, py::arg("samples") = 1000);

  m.def(
      "discretized_mass",
      [](const AnalyticShape& s, double edge, int resolution, double half_width) {
        const int n = s.ambient();
        const Mesh mesh(s.center() - Vec::Constant(n, half_width),
                        s.center() + Vec::Constant(n, half_width), edge);
        const WeightedSample sample = sample_surface(s, resolution);
        const auto v = discretize(sample, mesh);
        double total = 0.0;
        for (const auto& c : v.cells()) total += c.mass;
        return py::make_tuple(total, sample.total_weight(), v.cells().size());
      },
      py::arg("shape"), py::arg("edge"), py::arg("resolution") = 4096, py::arg("half_width") = 2.0,
      "(sum of cell masses, sampled mass, cell count) of the volumetric discretization");

  m.def(
      "mean_curvature",
      [](const AnalyticShape& s, const KernelPair& k, double eps, const Array& points,
         int resolution) {
        const Varifold v = SampledManifoldVarifold(sample_surface(s, resolution));
        const auto pts = to_points(points);
        const auto res = curvature_field(v, CurvatureQuery(eps, k), pts);
        py::array_t<double> out({static_cast<py::ssize_t>(pts.size()),
                                 static_cast<py::ssize_t>(s.ambient())});
        auto w = out.mutable_unchecked<2>();
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (res[i].status != CurvatureStatus::ok) {
            throw DenominatorTooSmall("regularized mass too small at point " + std::to_string(i));
          }
          for (int j = 0; j < s.ambient(); ++j) w(i, j) = res[i].mean_curvature(j);
        }
        return out;
      },
      py::arg("shape"), py::arg("kernel"), py::arg("epsilon"), py::arg("points"),
      py::arg("resolution") = 4096, "H_eps of the sampled shape at the given points");

  m.def(
      "bounded_lipschitz_distance",
      [](const Array& x1, const Array& m1, const Array& x2, const Array& m2) {
        const auto r = bounded_lipschitz_distance(to_measure(x1, m1), to_measure(x2, m2));
        py::dict d;
        d["value"] = r.value;
        d["a"] = r.a;
        d["lip"] = r.lip;
        d["iterations"] = r.iterations;
        return d;
      },
      py::arg("x1"), py::arg("m1"), py::arg("x2"), py::arg("m2"));

  m.def(
      "ahlfors_constant",
      [](const AnalyticShape& s, std::vector<double> radii, int probes, int resolution) {
        const auto r = ahlfors_estimate(SampledManifoldVarifold(sample_surface(s, resolution)), radii,
                                        shape_probe_points(s, probes));
        return r.c0;
      },
      py::arg("shape"), py::arg("radii"), py::arg("probes") = 16, py::arg("resolution") = 4096);

  m.def(
      "measure_C1",
      [](const AnalyticShape& s, const KernelPair& k, std::vector<double> eps, int resolution,
         int probes) { return measure_C1(s, k, eps, resolution, probes); },
      py::arg("shape"), py::arg("kernel"), py::arg("epsilons"), py::arg("resolution") = 4096,
      py::arg("probes") = 32);
  m.def(
      "measure_C2",
      [](const AnalyticShape& s, int resolution, double max_distance) {
        return measure_C2(sample_surface(s, resolution), max_distance);
      },
      py::arg("shape"), py::arg("resolution") = 4096, py::arg("max_distance") = 0.1);

  m.def(
      "constants_ledger",
      [](const KernelPair& k, double c0, double c1, double c2, double lambda_max, double mass0,
         double horizon, double phi_c1) {
        LedgerInputs in = ledger_inputs(k, c0, c1, c2, lambda_max, mass0, horizon, phi_c1);
        in.gamma = gamma_feasible(c0, lambda_max, in.beta, in.lip_xi, in.d).gamma;
        return ledger_dict(constants_ledger(in));
      },
      py::arg("kernel"), py::arg("c0"), py::arg("c1"), py::arg("c2"), py::arg("lambda_max"),
      py::arg("mass0"), py::arg("horizon"), py::arg("phi_c1") = 1.0,
      "Constants with gamma chosen by gamma_feasible");

  m.def("sphere_flow_radius", &analytic_sphere_flow, py::arg("r0"), py::arg("d"), py::arg("n"),
        py::arg("t"));

  m.def(
      "validate",
      [](const std::string& text) {
        std::vector<std::pair<bool, std::string>> out;
        for (const auto& d : validate(config_from_text(text))) out.emplace_back(d.fatal, d.message);
        return out;
      },
      py::arg("config_text"), "Diagnostics as (fatal, message) pairs");

  m.def(
      "run_experiment",
      [](const std::string& text, const std::string& out_dir) {
        const ExperimentConfig cfg = config_from_text(text);
        ExperimentOutcome r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg, out_dir);
        }
        py::dict d;
        d["passed"] = r.passed;
        d["checks"] = r.checks;
        d["files"] = r.files;
        return d;
      },
      py::arg("config_text"), py::arg("out_dir"));
}
