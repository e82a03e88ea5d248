#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rwlab/boundary.hpp"
#include "rwlab/discrete_measure.hpp"
#include "rwlab/dynamics.hpp"
#include "rwlab/experiments.hpp"
#include "rwlab/groups.hpp"
#include "rwlab/harnack.hpp"

namespace py = pybind11;
using namespace rwlab;

namespace {

GroupElement el(const std::string& s) { return parse_element(s); }

py::list atoms_of(const DiscreteMeasure& m) {
  py::list out;
  for (const auto& [g, w] : m.atoms()) out.append(py::make_tuple(format_element(g), format_rational(w)));
  return out;
}

py::dict verdict_dict(const Verdict& v) {
  py::dict d;
  d["ok"] = v.ok;
  d["margin"] = v.margin;
  d["points_checked"] = v.points_checked;
  d["diagnostic"] = v.diagnostic;
  return d;
}

GridSpec grid_spec(int nodes) {
  GridSpec g;
  if (nodes > 0) g.uniform_intervals = nodes;
  return g;
}

}  // namespace

PYBIND11_MODULE(_rwlab, m) {
  m.doc() = "Random walks on groups, harmonic majorants and the stationary counterexample";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<FamilyMismatch>(m, "FamilyMismatch", PyExc_ValueError);
  py::register_exception<CertificateError>(m, "CertificateError", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<cli::ConfigError>(m, "ConfigError", PyExc_ValueError);

  // groups
  m.def("normalize", [](const std::string& s) { return format_element(el(s)); }, py::arg("element"));
  m.def("compose", [](const std::string& g, const std::string& h) { return format_element(compose(el(g), el(h))); },
        py::arg("g"), py::arg("h"));
  m.def("inverse", [](const std::string& g) { return format_element(inverse(el(g))); }, py::arg("g"));
  m.def("word_length", [](const std::string& g) { return word_length(el(g)); }, py::arg("g"));
  m.def("family", [](const std::string& g) { return family_name(family_of(el(g))); }, py::arg("g"));
  m.def("is_identity", [](const std::string& g) { return is_identity(el(g)); }, py::arg("g"));

  py::class_<AffMap>(m, "AffMap")
      .def(py::init<double, double>(), py::arg("a") = 1.0, py::arg("b") = 0.0)
      .def_static("from_log_scale", &AffMap::from_log_scale, py::arg("log_a"), py::arg("b"))
      .def_property_readonly("a", &AffMap::a)
      .def_property_readonly("b", &AffMap::b)
      .def_property_readonly("log_a", &AffMap::log_a)
      .def("apply", &AffMap::apply)
      .def("inverse_apply", &AffMap::inverse_apply)
      .def("__matmul__", [](const AffMap& g, const AffMap& h) { return compose(g, h); })
      .def("inverse", [](const AffMap& g) { return inverse(g); })
      .def("__repr__", [](const AffMap& g) { return format_element(g); });

  // measures
  py::class_<DiscreteMeasure>(m, "DiscreteMeasure")
      .def_static("named", &named_measure, py::arg("name"))
      .def_static("from_json", &measure_from_json, py::arg("text"))
      .def("to_json", &measure_to_json)
      .def_property_readonly("family_tag", &DiscreteMeasure::family_tag)
      .def_property_readonly("support_size", &DiscreteMeasure::support_size)
      .def("atoms", &atoms_of, "list of (element, exact weight) pairs")
      .def("weight", [](const DiscreteMeasure& p, const std::string& g) { return format_rational(p.weight(el(g))); })
      .def("__mul__", &convolve_discrete)
      .def("power", [](const DiscreteMeasure& p, int n) { return convolution_power(p, n); }, py::arg("n"))
      .def("__eq__", &DiscreteMeasure::operator==);

  // harnack
  m.def(
      "discrete_certificate",
      [](const DiscreteMeasure& theta, const std::string& g, int max_n) {
        return certificate_to_json(discrete_certificate(theta, el(g), max_n));
      },
      py::arg("theta"), py::arg("element"), py::arg("max_n"), "certificate as JSON text");
  m.def(
      "verify_certificate",
      [](const DiscreteMeasure& theta, const std::string& cert) {
        return verdict_dict(verify_certificate(theta, certificate_from_json(cert)));
      },
      py::arg("theta"), py::arg("certificate"));
  m.def(
      "certificate_bound", [](const std::string& cert) { return format_rational(certificate_from_json(cert).bound()); },
      py::arg("certificate"));
  m.def(
      "harnack_exponent",
      [](const DiscreteMeasure& theta, const std::vector<int>& radii, int max_n) {
        const auto r = harnack_exponent(theta, radii, max_n);
        py::dict d;
        d["radii"] = r.radii;
        d["theta_of_r"] = r.theta_of_r;
        d["gamma_hat"] = r.gamma_hat;
        d["subadditive"] = r.subadditive;
        d["upper_estimate"] = r.upper_estimate;
        d["warnings"] = r.warnings;
        return d;
      },
      py::arg("theta"), py::arg("radii"), py::arg("max_n"));
  m.def("gaussian_alpha", &gaussian_alpha, py::arg("g"), py::arg("s"), py::arg("t"), py::arg("b"));

  // boundary
  py::class_<CounterexampleParams>(m, "CounterexampleParams")
      .def_readonly("alpha", &CounterexampleParams::alpha)
      .def_readonly("beta", &CounterexampleParams::beta)
      .def_readonly("delta", &CounterexampleParams::delta)
      .def_readonly("M", &CounterexampleParams::M)
      .def_readonly("c_A", &CounterexampleParams::c_A)
      .def_readonly("c_B", &CounterexampleParams::c_B);
  m.def("make_params", &make_params, py::arg("alpha") = 0.5, py::arg("beta") = 0.25, py::arg("delta") = 0.2,
        py::arg("M") = 1.0);
  m.def("density_A", &density_A);
  m.def("density_B", &density_B);

  py::class_<GridDensity>(m, "GridDensity")
      .def_property_readonly("nodes", &GridDensity::nodes)
      .def_property_readonly("values", &GridDensity::values)
      .def("__call__", &GridDensity::operator())
      .def("cdf", &GridDensity::cdf)
      .def("quantile", &GridDensity::quantile)
      .def("mass", &GridDensity::mass);
  py::class_<StationaryDensity>(m, "StationaryDensity")
      .def_readonly("rho", &StationaryDensity::rho)
      .def_readonly("residual", &StationaryDensity::residual)
      .def_readonly("iterations", &StationaryDensity::iterations)
      .def_readonly("converged", &StationaryDensity::converged);
  m.def(
      "fixed_point_solve",
      [](const CounterexampleParams& p, int nodes, double tol, int max_iter) {
        py::gil_scoped_release release;
        return fixed_point_solve(p, grid_spec(nodes), tol, max_iter);
      },
      py::arg("params"), py::arg("nodes") = 0, py::arg("tol") = 1e-6, py::arg("max_iter") = 200);
  m.def("rn_strict", &rn_strict, py::arg("g"), py::arg("x"), py::arg("rho"));
  m.def(
      "rn_derivative", [](const AffMap& g, double x, const GridDensity& rho) { return rn_derivative(g, x, rho).value; },
      py::arg("g"), py::arg("x"), py::arg("rho"));

  // dynamics
  m.def(
      "simulate_walk",
      [](const DiscreteMeasure& theta, int n, std::uint64_t seed) {
        std::vector<std::string> out;
        for (const auto& g : simulate_walk(StepLaw::discrete(theta), n, seed).steps) out.push_back(format_element(g));
        return out;
      },
      py::arg("theta"), py::arg("n"), py::arg("seed"));
  m.def("translate_measure", &translate_measure, py::arg("g"), py::arg("lo"), py::arg("hi"), py::arg("rho"));
  m.def(
      "martingale",
      [](const CounterexampleParams& p, const GridDensity& rho, double lo, double hi, int horizon, std::size_t trials,
         std::uint64_t seed) {
        const auto r = martingale_experiment(p, rho, lo, hi, horizon, trials, seed);
        py::dict d;
        d["mu_A"] = r.mu_A;
        std::vector<double> mean, se;
        for (const auto& row : r.rows) {
          mean.push_back(row.M.mean);
          se.push_back(row.M.se);
        }
        d["M_mean"] = mean;
        d["M_se"] = se;
        d["ok"] = r.ok();
        d["failures"] = r.failures;
        return d;
      },
      py::arg("params"), py::arg("rho"), py::arg("lo"), py::arg("hi"), py::arg("horizon"), py::arg("trials"),
      py::arg("seed"));

  // cli
  m.def("list_experiments", [] {
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (const auto& e : cli::list_experiments()) out.emplace_back(e.name, e.reference, e.summary);
    return out;
  });
  m.def(
      "run_experiment",
      [](const std::string& name, const std::map<std::string, std::string>& overrides) {
        cli::KeyValues kv(overrides.begin(), overrides.end());
        const auto cfg = cli::resolve_config(name, {}, kv);
        py::gil_scoped_release release;
        return cli::run_experiment(cfg).to_json().dump();
      },
      py::arg("name"), py::arg("overrides"), "run one experiment; returns report.json text");
}
