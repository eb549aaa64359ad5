#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "contactflow/models.hpp"
#include "contactflow/pythagorean.hpp"
#include "contactflow/scenario.hpp"

namespace py = pybind11;
using namespace cflow;

namespace {

// Trajectory as (times, states, diagnostic names, diagnostics) with states one row per time.
py::dict trajectory_dict(const Trajectory& tr, const std::vector<std::string>& state_names) {
  const Eigen::Index rows = static_cast<Eigen::Index>(tr.times.size());
  const Eigen::Index cols = rows ? tr.states.front().size() : 0;
  Mat states(rows, cols);
  for (Eigen::Index k = 0; k < rows; ++k) states.row(k) = tr.states[k].transpose();
  Mat diag(rows, static_cast<Eigen::Index>(tr.diagnostic_names.size()));
  for (Eigen::Index k = 0; k < rows && k < static_cast<Eigen::Index>(tr.diagnostics.size()); ++k)
    for (Eigen::Index j = 0; j < diag.cols(); ++j) diag(k, j) = tr.diagnostics[k][j];
  const char* status = tr.status == TrajectoryStatus::complete    ? "complete"
                       : tr.status == TrajectoryStatus::truncated ? "truncated"
                                                                  : "aborted";
  py::dict d;
  d["t"] = tr.times;
  d["states"] = states;
  d["state_names"] = state_names;
  d["diagnostic_names"] = tr.diagnostic_names;
  d["diagnostics"] = diag;
  d["status"] = status;
  d["message"] = tr.message;
  return d;
}

IntegratorConfig make_config(const std::string& method, double step, double rel_tol, double abs_tol,
                             double output_dt) {
  IntegratorConfig c;
  if (method == "rk4")
    c.method = Method::rk4;
  else if (method == "rkf45")
    c.method = Method::rkf45;
  else
    throw MalformedInput("method must be rk4 or rkf45");
  c.step = step;
  c.rel_tol = rel_tol;
  c.abs_tol = abs_tol;
  c.output_dt = output_dt;
  validate(c);
  return c;
}

std::vector<std::string> names(int n, bool extended) {
  auto name = [n](const char* base, int i) { return n == 1 ? std::string(base) : base + std::to_string(i + 1); };
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(name("x", i));
  if (extended) out.push_back("x_extra");
  for (int i = 0; i < n; ++i) out.push_back(name("p", i));
  if (extended) out.push_back("p_extra");
  out.push_back("z");
  return out;
}

py::list report_list(const InvariantReport& r) {
  py::list out;
  for (const auto& c : r.checks) {
    py::dict d;
    d["name"] = c.name;
    d["law"] = c.expected;
    d["expected"] = c.expected_value;
    d["fitted"] = c.fitted;
    d["residual"] = c.residual;
    d["tol"] = c.tol;
    d["pass"] = c.pass;
    d["condition"] = c.condition;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Contact Hamiltonian lifts of dynamics on dually flat spaces";
  m.attr("__version__") = CONTACTFLOW_VERSION;

  auto base = py::register_exception<Error>(m, "ContactflowError", PyExc_RuntimeError);
  py::register_exception<MalformedInput>(m, "MalformedInput", base.ptr());
  py::register_exception<ConvexityError>(m, "ConvexityError", base.ptr());
  py::register_exception<NonConvergence>(m, "NonConvergence", base.ptr());
  py::register_exception<NotPythagorean>(m, "NotPythagorean", base.ptr());
  py::register_exception<NumericalAbort>(m, "NumericalAbort", base.ptr());
  py::register_exception<OutsideInvariantChart>(m, "OutsideInvariantChart", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  py::class_<ConvexPotential>(m, "ConvexPotential")
      .def_property_readonly("n", [](const ConvexPotential& p) { return p.n; })
      .def_property_readonly("name", [](const ConvexPotential& p) { return p.name; })
      .def("value", [](const ConvexPotential& p, const Vec& x) { return p.value(x); })
      .def("gradient", [](const ConvexPotential& p, const Vec& x) { return p.gradient(x); })
      .def("hessian", [](const ConvexPotential& p, const Vec& x) { return p.hessian(x); });

  m.def("quadratic", &potentials::quadratic, py::arg("M"));
  m.def("log_cosh", &potentials::log_cosh);
  m.def("spin_product", &potentials::spin_product, py::arg("n"));
  m.def("named_potential", &named_potential, py::arg("name"), py::arg("n"), py::arg("M") = std::nullopt);

  m.def(
      "legendre_transform",
      [](const ConvexPotential& psi, const Vec& p) {
        const LegendreTransformResult r = legendre_transform(psi, p);
        py::dict d;
        d["phi"] = r.phi_value;
        d["x_star"] = r.x_star;
        d["iterations"] = r.iterations;
        d["residual"] = r.residual;
        return d;
      },
      py::arg("psi"), py::arg("p"));
  m.def(
      "involution_check", [](const ConvexPotential& psi, const Vec& x) { return involution_check(psi, x); },
      py::arg("psi"), py::arg("x"));
  m.def(
      "fenchel_young_gap",
      [](const ConvexPotential& psi, const Vec& x, const Vec& p) { return fenchel_young_gap(psi, x, p); },
      py::arg("psi"), py::arg("x"), py::arg("p"));

  py::class_<DuallyFlatWorkspace>(m, "DuallyFlatWorkspace")
      .def(py::init([](const ConvexPotential& psi) { return DuallyFlatWorkspace(psi); }), py::arg("psi"))
      .def_property_readonly("dim", &DuallyFlatWorkspace::dim)
      .def_property_readonly("psi", &DuallyFlatWorkspace::psi)
      .def_property_readonly("phi", &DuallyFlatWorkspace::phi)
      .def("p_of", &DuallyFlatWorkspace::p_of, py::arg("x"))
      .def("x_of", [](const DuallyFlatWorkspace& ws, const Vec& p) { return ws.x_of(p); }, py::arg("p"))
      .def("divergence", &canonical_divergence, py::arg("x"), py::arg("x_prime"));

  py::class_<LiftSpec>(m, "LiftSpec")
      .def_property_readonly("dim", &LiftSpec::dim)
      .def_property_readonly("side", [](const LiftSpec& s) { return s.side == Side::psi ? "psi" : "phi"; })
      .def_property_readonly("gamma0", [](const LiftSpec& s) { return s.restoring.gamma0; })
      .def_property_readonly("potential", [](const LiftSpec& s) { return s.potential; })
      .def("drift", [](const LiftSpec& s, const Vec& y) { return s.drift.eval(y); }, py::arg("y"))
      .def(
          "embed",
          [](const LiftSpec& s, const Vec& chart) { return flatten(lift_embed(s, chart)); },
          py::arg("chart"), "flat state (x, p, z) of the submanifold point over a chart coordinate")
      .def(
          "hamiltonian",
          [](const LiftSpec& s, const Vec& y) { return build_hamiltonian(s)(unflatten_point(y, s.dim())); },
          py::arg("state"))
      .def(
          "deltas",
          [](const LiftSpec& s, const Vec& y) {
            const Deltas d = lift_deltas(s, unflatten_point(y, s.dim()));
            return py::make_tuple(d.d0, d.d);
          },
          py::arg("state"))
      .def(
          "vector_field", [](const LiftSpec& s, const Vec& y) { return lifted_system(s)(y); }, py::arg("state"))
      .def(
          "divergence",
          [](const LiftSpec& s, const Vec& y) {
            return numeric_divergence(build_hamiltonian(s), unflatten_point(y, s.dim()));
          },
          py::arg("state"));

  py::class_<ExtendedLiftSpec>(m, "ExtendedLiftSpec")
      .def_property_readonly("dim", &ExtendedLiftSpec::dim)
      .def_property_readonly("anchor", [](const ExtendedLiftSpec& e) { return e.anchor; })
      .def_property_readonly("base", [](const ExtendedLiftSpec& e) { return e.base; })
      .def(
          "embed",
          [](const ExtendedLiftSpec& e, const Vec& chart, double extra) {
            return flatten_state(embed_extended(e, chart, extra));
          },
          py::arg("chart"), py::arg("extra") = 0.0)
      .def(
          "generating_value",
          [](const ExtendedLiftSpec& e, const Vec& y) { return generating_value(e, unflatten_state(y, e.dim())); },
          py::arg("state"))
      .def(
          "vector_field", [](const ExtendedLiftSpec& e, const Vec& y) { return extended_system(e)(y); },
          py::arg("state"));

  auto circuit = [](double R, double C, double L, double T0, double gamma0) {
    CircuitParams p;
    p.R = R;
    p.C = C;
    p.L = L;
    p.T0 = T0;
    p.gamma0 = gamma0;
    return p;
  };
  m.def("rc", [=](double R, double C, double g) { return rc_spec(circuit(R, C, 0, 0, g)); }, py::arg("R"),
        py::arg("C"), py::arg("gamma0") = 1.0);
  m.def("rl", [=](double R, double L, double g) { return rl_spec(circuit(R, 0, L, 0, g)); }, py::arg("R"),
        py::arg("L"), py::arg("gamma0") = 1.0);
  m.def("rlc", [=](double R, double C, double L, double g) { return rlc_spec(circuit(R, C, L, 0, g)); },
        py::arg("R"), py::arg("C"), py::arg("L"), py::arg("gamma0") = 1.0);
  m.def("rc_thermal", [=](double R, double C, double T0, double g) { return rc_thermal_spec(circuit(R, C, 0, T0, g)); },
        py::arg("R"), py::arg("C"), py::arg("T0"), py::arg("gamma0") = 1.0);
  m.def("rl_thermal", [=](double R, double L, double T0, double g) { return rl_thermal_spec(circuit(R, 0, L, T0, g)); },
        py::arg("R"), py::arg("L"), py::arg("T0"), py::arg("gamma0") = 1.0);
  m.def(
      "rlc_thermal",
      [=](double R, double C, double L, double T0, double g) { return rlc_thermal_spec(circuit(R, C, L, T0, g)); },
      py::arg("R"), py::arg("C"), py::arg("L"), py::arg("T0"), py::arg("gamma0") = 1.0);
  m.def(
      "spin", [](double theta, double gamma0, double lambda0) { return spin_spec({theta, gamma0, lambda0}); },
      py::arg("theta"), py::arg("gamma0") = 1.0, py::arg("lambda0") = 0.0);
  m.def(
      "onsager", [](const Mat& L, double gamma0) { return onsager_spec(make_onsager(L, std::nullopt, gamma0)); },
      py::arg("L"), py::arg("gamma0") = 1.0);
  m.def("oscillatory", &oscillatory_spec, py::arg("psi"), py::arg("omega"), py::arg("gamma0") = 1.0);
  m.def(
      "geodesic",
      [](const DuallyFlatWorkspace& ws, const Vec& from, const Vec& to, const std::string& side) {
        if (side == "psi") return psi_lift(ws, geodesic_drift_psi(ws, from, to), RestoringFunction::linear(1.0));
        if (side == "phi") return phi_lift(ws, geodesic_drift_phi(ws, from, to), RestoringFunction::linear(1.0));
        throw MalformedInput("side must be psi or phi");
      },
      py::arg("ws"), py::arg("start"), py::arg("end"), py::arg("side") = "psi");
  m.def(
      "gradient_flow",
      [](const DuallyFlatWorkspace& ws, const Vec& target, const std::string& side) {
        if (side == "psi") return psi_lift(ws, gradient_drift_psi(ws, target), RestoringFunction::linear(1.0));
        if (side == "phi") return phi_lift(ws, gradient_drift_phi(ws, target), RestoringFunction::linear(1.0));
        throw MalformedInput("side must be psi or phi");
      },
      py::arg("ws"), py::arg("target"), py::arg("side") = "psi");

  m.def(
      "simulate",
      [](const LiftSpec& s, const Vec& y0, double t_end, const std::string& method, double step, double rel_tol,
         double abs_tol, double output_dt) {
        const DiagnosticSet ds = lift_diagnostics(s);
        const IntegratorConfig c = make_config(method, step, rel_tol, abs_tol, output_dt);
        return trajectory_dict(integrate(lifted_system(s), y0, 0.0, t_end, c, ds.names, ds.fn),
                               names(s.dim(), false));
      },
      py::arg("spec"), py::arg("y0"), py::arg("t_end"), py::arg("method") = "rkf45", py::arg("step") = 1e-3,
      py::arg("rel_tol") = 1e-10, py::arg("abs_tol") = 1e-12, py::arg("output_dt") = 0.0);
  m.def(
      "simulate_extended",
      [](const ExtendedLiftSpec& e, const Vec& y0, double t_end, bool thermal, const std::string& method,
         double step, double rel_tol, double abs_tol, double output_dt) {
        const DiagnosticSet ds = extended_diagnostics(e, thermal);
        const IntegratorConfig c = make_config(method, step, rel_tol, abs_tol, output_dt);
        return trajectory_dict(integrate(extended_system(e), y0, 0.0, t_end, c, ds.names, ds.fn),
                               names(e.dim(), true));
      },
      py::arg("spec"), py::arg("y0"), py::arg("t_end"), py::arg("thermal") = false, py::arg("method") = "rkf45",
      py::arg("step") = 1e-3, py::arg("rel_tol") = 1e-10, py::arg("abs_tol") = 1e-12, py::arg("output_dt") = 0.0);

  m.def(
      "onsager_certificate",
      [](const Mat& L, double gamma0, const std::vector<Vec>& samples) {
        const OnsagerParams o = make_onsager(L, std::nullopt, gamma0);
        const StabilityVerdict v = stability_certificate(onsager_spec(o), onsager_query(o, samples));
        py::dict d;
        d["verdict"] = to_string(v.verdict);
        d["min_eigenvalue"] = v.min_eigenvalue;
        d["spectral_bound"] = v.spectral_bound;
        py::list conds;
        for (const auto& c : v.conditions) conds.append(py::make_tuple(c.name, c.value, c.holds));
        d["conditions"] = conds;
        return d;
      },
      py::arg("L"), py::arg("gamma0"), py::arg("samples"));

  m.def("mixed_corner", &mixed_corner, py::arg("ws"), py::arg("x1"), py::arg("x3"), py::arg("from_third"));
  m.def(
      "pythagorean_check",
      [](const DuallyFlatWorkspace& ws, const Vec& x1, const Vec& x2, const Vec& x3, double rel_tol) {
        PythagoreanOptions o;
        o.integrator.rel_tol = rel_tol;
        o.integrator.abs_tol = rel_tol * 1e-2;
        const PythagoreanResult r = pythagorean_check(ws, x1, x2, x3, o);
        py::dict d;
        d["residual"] = r.residual;
        d["d31"] = r.d31;
        d["d32"] = r.d32;
        d["d21"] = r.d21;
        d["orthogonality"] = r.orthogonality;
        d["endpoint_error"] = r.endpoint_error;
        return d;
      },
      py::arg("ws"), py::arg("x1"), py::arg("x2"), py::arg("x3"), py::arg("rel_tol") = 1e-12);

  m.def(
      "run_scenario",
      [](const std::string& text, const std::filesystem::path& out_dir, std::optional<double> tol, bool write) {
        std::istringstream in(text);
        const Scenario sc = parse_scenario(in, "<string>");
        RunOptions o;
        o.out_dir = out_dir;
        o.tol = tol;
        o.write_artifacts = write;
        const RunResult r = run_scenario(sc, o);
        py::dict d;
        d["exit_code"] = r.exit_code;
        d["message"] = r.message;
        d["checks"] = report_list(r.report);
        if (!r.trajectory.times.empty()) d["trajectory"] = trajectory_dict(r.trajectory, r.state_names);
        return d;
      },
      py::arg("text"), py::arg("out_dir") = ".", py::arg("tol") = std::nullopt, py::arg("write") = false,
      "parse and run a scenario given as text; returns the exit code, checks and trajectory");
}
