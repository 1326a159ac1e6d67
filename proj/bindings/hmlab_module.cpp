#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hmlab/analysis.hpp"
#include "hmlab/analytic_map.hpp"
#include "hmlab/calculus.hpp"
#include "hmlab/field_io.hpp"
#include "hmlab/metric.hpp"
#include "hmlab/solver.hpp"
#include "hmlab/util.hpp"

namespace py = pybind11;
using namespace hmlab;

namespace {

template <typename T>
py::array field_values(const Field<T>& f) {
  py::array_t<T> out({f.ny(), f.nx()});
  auto r = out.template mutable_unchecked<2>();
  for (int j = 0; j < f.ny(); ++j)
    for (int i = 0; i < f.nx(); ++i) r(j, i) = f.at(i, j);
  return out;
}

template <typename T>
py::array field_mask(const Field<T>& f) {
  py::array_t<bool> out({f.ny(), f.nx()});
  auto r = out.template mutable_unchecked<2>();
  for (int j = 0; j < f.ny(); ++j)
    for (int i = 0; i < f.nx(); ++i) r(j, i) = f.valid(i, j);
  return out;
}

template <typename T>
Field<T> field_from_array(const Grid& g, py::array_t<T, py::array::c_style | py::array::forcecast> values) {
  if (values.ndim() != 2 || values.shape(0) != g.ny || values.shape(1) != g.nx)
    throw Error("array shape must be (ny, nx)");
  Field<T> f(g);
  auto r = values.template unchecked<2>();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) f.at(i, j) = r(j, i);
  return f;
}

template <typename T>
void bind_field(py::module_& m, const char* name) {
  py::class_<Field<T>>(m, name)
      .def(py::init<const Grid&>())
      .def_property_readonly("grid", &Field<T>::grid)
      .def("values", &field_values<T>, "node values as a (ny, nx) array")
      .def("mask", &field_mask<T>, "validity mask as a (ny, nx) bool array")
      .def("valid_count", &Field<T>::valid_count)
      .def("at", [](const Field<T>& f, int i, int j) { return f.at(i, j); })
      .def("set", [](Field<T>& f, int i, int j, T v) { f.at(i, j) = v; })
      .def("set_valid", &Field<T>::set_valid);
}

py::dict report_dict(const IdentityReport& r) {
  py::dict d;
  d["name"] = r.name;
  d["linf"] = r.linf;
  d["l2"] = r.l2;
  d["evaluated_nodes"] = r.evaluated_nodes;
  d["excluded_nodes"] = r.excluded_nodes;
  d["spacing"] = r.spacing;
  d["passed"] = r.passed;
  d["tolerance_used"] = r.tolerance_used;
  d["empty"] = r.empty;
  return d;
}

py::dict result_dict(const CheckResult& r) {
  py::dict d = report_dict(r.report);
  py::dict extras;
  for (const auto& [k, v] : r.extras) extras[py::str(k)] = v;
  d["extras"] = extras;
  return d;
}

CheckOptions make_opts(double tolerance, double extra_tol, double slack, double r_floor_rel) {
  CheckOptions o;
  o.tolerance = tolerance;
  o.extra_tol = extra_tol;
  o.slack = slack;
  o.r_floor_rel = r_floor_rel;
  return o;
}

}  // namespace

PYBIND11_MODULE(_hmlab, m) {
  m.doc() = "Harmonic maps between conformal metrics: solver and identity checks";

  py::register_exception<Error>(m, "HmlabError");

  py::class_<Grid>(m, "Grid")
      .def(py::init<double, double, int, int, double>(), py::arg("x0"), py::arg("y0"),
           py::arg("nx"), py::arg("ny"), py::arg("s"))
      .def_readonly("x0", &Grid::x0)
      .def_readonly("y0", &Grid::y0)
      .def_readonly("nx", &Grid::nx)
      .def_readonly("ny", &Grid::ny)
      .def_readonly("s", &Grid::s)
      .def("node", &Grid::node);

  bind_field<Complex>(m, "ComplexField");
  bind_field<double>(m, "RealField");
  m.def("complex_field_from_array", &field_from_array<Complex>, py::arg("grid"), py::arg("values"));
  m.def("real_field_from_array", &field_from_array<double>, py::arg("grid"), py::arg("values"));

  // Finite-difference calculus.
  m.def("wirtinger_dz", py::overload_cast<const ComplexField&>(&wirtinger_dz));
  m.def("wirtinger_dz_real", py::overload_cast<const RealField&>(&wirtinger_dz));
  m.def("wirtinger_dzbar", py::overload_cast<const ComplexField&>(&wirtinger_dzbar));
  m.def("laplacian", py::overload_cast<const ComplexField&>(&laplacian));
  m.def("laplacian_real", py::overload_cast<const RealField&>(&laplacian));
  m.def("grad_norm_sq", &grad_norm_sq);
  m.def("second_derivatives", [](const ComplexField& f) {
    SecondDerivatives d = second_derivatives(f);
    return py::make_tuple(d.zz, d.zzbar, d.zbarzbar);
  });
  m.def("log_laplacian_crosscheck", &log_laplacian_crosscheck, py::arg("field"),
        py::arg("positivity_floor_rel") = 1e-12);

  // Metrics.
  py::class_<ConformalMetric>(m, "ConformalMetric")
      .def_property_readonly("spec", &ConformalMetric::spec)
      .def("rho", &ConformalMetric::rho)
      .def("log_rho2_w", &ConformalMetric::log_rho2_w)
      .def("curvature", &ConformalMetric::curvature)
      .def("in_domain", &ConformalMetric::in_domain)
      .def("scaled", &ConformalMetric::scaled);
  m.def("metric", &parse_metric_spec, py::arg("spec"),
        "euclidean | spherical | hyperbolic | radial:<name> | tabulated:<path>");
  m.def("tabulated_metric",
        [](const RealField& rho) { return ConformalMetric::tabulated(rho); });
  m.def("verify_metric_consistency",
        [](const ConformalMetric& metric, int samples, std::uint64_t seed) {
          auto pts = seeded_samples(metric, samples, seed);
          MetricConsistency c = verify_metric_consistency(metric, pts);
          py::dict d;
          d["curvature_err"] = c.curvature_err;
          d["logderiv_err"] = c.logderiv_err;
          d["max_err"] = c.max_err();
          return d;
        },
        py::arg("metric"), py::arg("samples") = 100, py::arg("seed") = kDefaultSeed);

  // Analytic test maps.
  py::class_<AnalyticMap>(m, "AnalyticMap")
      .def_property_readonly("spec", &AnalyticMap::spec)
      .def("h", &AnalyticMap::h)
      .def("hz", &AnalyticMap::hz)
      .def("hzb", &AnalyticMap::hzb)
      .def("hzz", &AnalyticMap::hzz)
      .def("hzzb", &AnalyticMap::hzzb)
      .def("hzbzb", &AnalyticMap::hzbzb);
  m.def("map", &parse_map_spec, py::arg("spec"),
        "affine:c=re,im | ehpoly:g=...;k=... | holo:...");
  m.def("euclidean_harmonic", [](const Poly& g, const Poly& k) { return euclidean_harmonic(g, k); });
  m.def("holomorphic_map", [](const Poly& c) { return holomorphic_map(c); });
  m.def("precompose_holomorphic", &precompose_holomorphic);
  m.def("sample", &sample, py::arg("map"), py::arg("grid"));

  // Solver.
  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("tol", &SolverConfig::tol)
      .def_readwrite("max_iters", &SolverConfig::max_iters)
      .def_readwrite("omega", &SolverConfig::omega)
      .def("set_sweep", [](SolverConfig& c, const std::string& s) { c.sweep = parse_sweep(s); });
  py::class_<HarmonicSolution>(m, "HarmonicSolution")
      .def_readonly("h", &HarmonicSolution::h)
      .def_readonly("residual_linf", &HarmonicSolution::residual_linf)
      .def_readonly("iterations", &HarmonicSolution::iterations)
      .def_readonly("energy", &HarmonicSolution::energy)
      .def_readonly("converged", &HarmonicSolution::converged)
      .def_property_readonly("status",
                             [](const HarmonicSolution& s) { return status_name(s.status); });
  m.def("boundary_from_map", &boundary_from_map);
  m.def("harmonic_extension",
        [](const ComplexField& boundary, double tol) {
          return harmonic_extension(boundary, LinearSolveOptions{tol, 0});
        },
        py::arg("boundary"), py::arg("tol") = 1e-10);
  m.def("pde_residual", &pde_residual);
  m.def("solve_harmonic", &solve_harmonic, py::arg("boundary"), py::arg("metric"),
        py::arg("config") = SolverConfig{});
  m.def("energy",
        py::overload_cast<const ComplexField&, const ConformalMetric&, const ConformalMetric&>(
            &energy));
  m.def("energy", py::overload_cast<const ComplexField&, const ConformalMetric&>(&energy));
  m.def("critical_point_probe",
        [](const HarmonicSolution& sol, int n, double amplitude, std::uint64_t seed) {
          ProbeReport r = critical_point_probe(sol, n, amplitude, seed);
          py::dict d;
          d["base_energy"] = r.base_energy;
          d["amplitude"] = r.amplitude;
          d["min_dE"] = r.min_dE;
          py::list bumps;
          for (const auto& b : r.bumps) {
            py::dict bd;
            bd["p"] = b.p;
            bd["q"] = b.q;
            bd["dE"] = b.dE;
            bd["dE_half"] = b.dE_half;
            bd["exponent"] = b.exponent;
            bumps.append(bd);
          }
          d["bumps"] = bumps;
          return d;
        },
        py::arg("solution"), py::arg("n_perturbations") = 5, py::arg("amplitude") = 0.05,
        py::arg("seed") = kDefaultSeed);

  // Analysis.
  py::class_<JacobianBundle>(m, "JacobianBundle")
      .def_readonly("h", &JacobianBundle::h)
      .def_readonly("hz", &JacobianBundle::hz)
      .def_readonly("hzb", &JacobianBundle::hzb)
      .def_readonly("dh", &JacobianBundle::dh)
      .def_readonly("dbh", &JacobianBundle::dbh)
      .def_readonly("J", &JacobianBundle::J)
      .def_readonly("D", &JacobianBundle::D)
      .def_readonly("J0", &JacobianBundle::J0)
      .def_readonly("D0", &JacobianBundle::D0)
      .def_readonly("A", &JacobianBundle::A)
      .def_readonly("B", &JacobianBundle::B);
  m.def("jacobian_bundle",
        [](const ComplexField& h, const ConformalMetric& metric, double floor_rel) {
          return jacobian_bundle(h, metric, floor_rel);
        },
        py::arg("h"), py::arg("metric"), py::arg("floor_rel") = 1e-8);
  m.def("jacobian_bundle_exact",
        [](const AnalyticMap& mp, const Grid& g, const ConformalMetric& metric, double floor_rel) {
          return jacobian_bundle(mp, g, metric, floor_rel);
        },
        py::arg("map"), py::arg("grid"), py::arg("metric"), py::arg("floor_rel") = 1e-8);

  auto opts_args = [](py::dict kw) { return kw; };
  (void)opts_args;

  m.def("bochner_residuals",
        [](const JacobianBundle& b, double tolerance, double extra_tol) {
          auto [p, q] = bochner_residuals(b, make_opts(tolerance, extra_tol, -1, 1e-8));
          return py::make_tuple(result_dict(p), result_dict(q));
        },
        py::arg("bundle"), py::arg("tolerance") = -1.0, py::arg("extra_tol") = 0.0);
  m.def("sigma_bochner_residuals",
        [](const JacobianBundle& b, const ConformalMetric& domain, double tolerance,
           double extra_tol) {
          auto [p, q] =
              sigma_bochner_residuals(b, domain, make_opts(tolerance, extra_tol, -1, 1e-8));
          return py::make_tuple(result_dict(p), result_dict(q));
        },
        py::arg("bundle"), py::arg("domain"), py::arg("tolerance") = -1.0,
        py::arg("extra_tol") = 0.0);
  m.def("main_identity_residual",
        [](const JacobianBundle& b, double tolerance, double extra_tol) {
          return result_dict(main_identity_residual(b, make_opts(tolerance, extra_tol, -1, 1e-8)));
        },
        py::arg("bundle"), py::arg("tolerance") = -1.0, py::arg("extra_tol") = 0.0);
  m.def("presubtraction_identity_residual",
        [](const JacobianBundle& b, double tolerance, double extra_tol) {
          return result_dict(
              presubtraction_identity_residual(b, make_opts(tolerance, extra_tol, -1, 1e-8)));
        },
        py::arg("bundle"), py::arg("tolerance") = -1.0, py::arg("extra_tol") = 0.0);
  m.def("log_bridge_check",
        [](const JacobianBundle& b, double tolerance, double extra_tol) {
          return result_dict(log_bridge_check(b, make_opts(tolerance, extra_tol, -1, 1e-8)));
        },
        py::arg("bundle"), py::arg("tolerance") = -1.0, py::arg("extra_tol") = 0.0);
  m.def("quadratic_form",
        [](const JacobianBundle& b) {
          auto [field, result] = quadratic_form(b);
          return py::make_tuple(field, result_dict(result));
        },
        py::arg("bundle"));
  m.def("superharmonicity_check",
        [](const JacobianBundle& b, double slack) {
          return result_dict(superharmonicity_check(b, make_opts(-1, 0, slack, 1e-8)));
        },
        py::arg("bundle"), py::arg("slack") = -1.0);
  m.def("minimum_principle_check",
        [](const RealField& J, int i0, int j0, int i1, int j1, double slack) {
          return result_dict(
              minimum_principle_check(J, IndexRect{i0, j0, i1, j1}, make_opts(-1, 0, slack, 1e-8)));
        },
        py::arg("J"), py::arg("i0"), py::arg("j0"), py::arg("i1"), py::arg("j1"),
        py::arg("slack") = -1.0);
  m.def("hopf_check",
        [](const JacobianBundle& b, double tolerance, double extra_tol) {
          return result_dict(
              hopf_check(b, make_opts(tolerance, extra_tol, -1, 1e-8)));
        },
        py::arg("bundle"), py::arg("tolerance") = -1.0, py::arg("extra_tol") = 0.0);
  m.def("radial_identity_residual",
        [](const JacobianBundle& b, double tolerance, double extra_tol, double r_floor_rel) {
          return result_dict(
              radial_identity_residual(b, make_opts(tolerance, extra_tol, -1, r_floor_rel)));
        },
        py::arg("bundle"), py::arg("tolerance") = -1.0, py::arg("extra_tol") = 0.0,
        py::arg("r_floor_rel") = 1e-8);

  // HMFIELD I/O.
  m.def("save_hmfield",
        [](const std::string& path, const ComplexField& f) { save_hmfield(path, f); });
  m.def("save_hmfield_real",
        [](const std::string& path, const RealField& f) { save_hmfield(path, f); });
  m.def("load_hmfield", [](const std::string& path) -> py::object {
    AnyField f = load_hmfield(path);
    if (auto* c = std::get_if<ComplexField>(&f)) return py::cast(*c);
    return py::cast(std::get<RealField>(f));
  });

  m.attr("DEFAULT_SEED") = kDefaultSeed;
}
