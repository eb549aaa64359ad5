#include "contactflow/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "contactflow/models.hpp"
#include "contactflow/pythagorean.hpp"

namespace cflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

double parse_number(const std::string& text, int line, const std::string& field) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t[0] == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ParseError("'" + text + "' is not a number", line, field);
  if (!std::isfinite(v)) throw ParseError("'" + text + "' is not finite", line, field);
  return v;
}

const std::set<std::string> integrator_keys = {"method", "step",      "rel_tol", "abs_tol",
                                               "min_step", "max_steps", "output_dt", "t_end"};
const std::set<std::string> output_keys = {"trajectory_csv", "invariant_report", "divergence_table",
                                           "divergence_grid"};

// Key lookup that remembers what was consumed so leftovers can be rejected.
class Params {
 public:
  Params(const ScenarioSection& s, std::string section, int header_line)
      : s_(s), section_(std::move(section)), line_(header_line) {}

  bool has(const std::string& k) const { return s_.count(k) != 0; }

  const ScenarioEntry& entry(const std::string& k) {
    const auto it = s_.find(k);
    if (it == s_.end()) throw ParseError("[" + section_ + "] is missing '" + k + "'", line_, k);
    used_.insert(k);
    return it->second;
  }
  double num(const std::string& k) { return scenario_number(entry(k), k); }
  double num(const std::string& k, double def) { return has(k) ? num(k) : def; }
  Vec vec(const std::string& k) { return scenario_vector(entry(k), k); }
  Mat mat(const std::string& k) { return scenario_matrix(entry(k), k); }
  std::string str(const std::string& k) { return trim(entry(k).value); }
  std::string str(const std::string& k, const std::string& def) { return has(k) ? str(k) : def; }
  int line(const std::string& k) const { return has(k) ? s_.at(k).line : line_; }

  void finish() const {
    for (const auto& [k, e] : s_)
      if (!used_.count(k)) throw ParseError("unknown key '" + k + "' in [" + section_ + "]", e.line, k);
  }

 private:
  const ScenarioSection& s_;
  std::string section_;
  int line_;
  std::set<std::string> used_;
};

// Wraps model-construction errors with the model line.
template <class F>
auto at_line(int line, const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const MalformedInput& e) {
    throw ParseError(e.what(), line, field);
  } catch (const ConvexityError& e) {
    throw ParseError(e.what(), line, field);
  }
}

std::vector<std::string> state_names(int n, bool extended) {
  auto name = [n](const char* base, int i) { return n == 1 ? std::string(base) : base + std::to_string(i + 1); };
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(name("x", i));
  if (extended) out.push_back("x_extra");
  for (int i = 0; i < n; ++i) out.push_back(name("p", i));
  if (extended) out.push_back("p_extra");
  out.push_back("z");
  return out;
}

std::vector<double> column(const Trajectory& tr, size_t k) {
  std::vector<double> c;
  for (const auto& row : tr.diagnostics) c.push_back(row.at(k));
  return c;
}

size_t col_index(const Trajectory& tr, const std::string& name) {
  for (size_t k = 0; k < tr.diagnostic_names.size(); ++k)
    if (tr.diagnostic_names[k] == name) return k;
  throw MalformedInput("missing diagnostic " + name);
}

// What the scenario describes, after parsing the model section.
struct Problem {
  std::string family;
  bool extended = false;
  std::optional<LiftSpec> lift;
  std::optional<ExtendedLiftSpec> ext;
  std::optional<DuallyFlatWorkspace> ws;  // psi-side models and workspace models
  bool default_potential = true;
  CircuitParams circuit;
  SpinParams spin;
  std::optional<OnsagerParams> onsager;
  std::optional<Vec> U_center;
  double omega = 0.0;
  Vec from, to, target;
  Vec x1, x2, x3;  // pythagorean
  const LiftSpec& base() const { return extended ? ext->base : *lift; }
  int dim() const { return base().dim(); }
};

ConvexPotential potential_from(Params& m, int default_n) {
  const std::string name = m.str("potential", "quadratic");
  std::optional<Mat> M;
  if (m.has("M")) M = m.mat("M");
  const int n = m.has("n") ? static_cast<int>(m.num("n")) : (M ? static_cast<int>(M->rows()) : default_n);
  return at_line(m.line("potential"), "potential", [&] { return named_potential(name, n, M); });
}

CircuitParams circuit_params(Params& m) {
  CircuitParams c;
  c.R = m.num("R", 1.0);
  c.C = m.num("C", 0.0);
  c.L = m.num("L", 0.0);
  c.T0 = m.num("T0", 0.0);
  c.gamma0 = m.num("gamma0", 1.0);
  return c;
}

Problem build_problem(const Scenario& sc) {
  Params m(sc.model_params, "model", sc.model_line);
  Problem pr;
  std::string fam = sc.model;
  const int ml = sc.model_line;
  auto thermal_name = [&](const std::string& base) {
    if (fam == base + "_thermal") return true;
    return false;
  };

  if (fam == "rc" || fam == "rc_thermal" || fam == "rl" || fam == "rl_thermal" || fam == "rlc" ||
      fam == "rlc_thermal") {
    const std::string base = fam.substr(0, fam.find('_'));
    pr.circuit = circuit_params(m);
    const bool thermal = thermal_name(base) || pr.circuit.T0 > 0.0;
    if (thermal_name(base) && !(pr.circuit.T0 > 0.0)) throw ParseError("thermal model needs T0 > 0", m.line("T0"), "T0");
    pr.family = base;
    pr.extended = thermal;
    at_line(ml, "name", [&] {
      if (base == "rc") {
        if (thermal) pr.ext = rc_thermal_spec(pr.circuit); else pr.lift = rc_spec(pr.circuit);
      } else if (base == "rl") {
        if (thermal) pr.ext = rl_thermal_spec(pr.circuit); else pr.lift = rl_spec(pr.circuit);
      } else {
        if (thermal) pr.ext = rlc_thermal_spec(pr.circuit); else pr.lift = rlc_spec(pr.circuit);
      }
      return 0;
    });
  } else if (fam == "spin") {
    pr.family = fam;
    pr.spin.theta = m.num("theta", 0.0);
    pr.spin.gamma0 = m.num("gamma0", 1.0);
    pr.spin.lambda0 = m.num("lambda0", 0.0);
    pr.lift = at_line(ml, "name", [&] { return spin_spec(pr.spin); });
    pr.ws.emplace(pr.lift->potential);
  } else if (fam == "onsager") {
    pr.family = fam;
    const Mat L = m.mat("L");
    const double g0 = m.num("gamma0", 1.0);
    std::optional<ScalarField> U;
    if (m.has("U_matrix")) {
      const Mat K = m.mat("U_matrix");
      const Vec c = m.has("U_center") ? m.vec("U_center") : Vec::Zero(K.rows());
      if (K.rows() != L.rows() || K.cols() != L.cols() || c.size() != L.rows())
        throw ParseError("U_matrix and U_center must match L", m.line("U_matrix"), "U_matrix");
      pr.U_center = c;
      U = at_line(m.line("U_matrix"), "U_matrix", [&] {
        ConvexPotential q = potentials::quadratic(K);
        return make_scalar_field(
            static_cast<int>(K.rows()), [q, c](const Vec& x) { return q.value(Vec(x - c)); },
            [q, c](const Vec& x) { return q.gradient(Vec(x - c)); },
            [q, c](const Vec& x) { return q.hessian(Vec(x - c)); }, "quadratic_U");
      });
    } else if (m.has("U_center")) {
      throw ParseError("U_center needs U_matrix", m.line("U_center"), "U_center");
    }
    pr.onsager = at_line(m.line("L"), "L", [&] { return make_onsager(L, U, g0); });
    pr.lift = at_line(ml, "name", [&] { return onsager_spec(*pr.onsager); });
    pr.ws.emplace(pr.lift->potential);
  } else if (fam == "oscillatory") {
    pr.family = fam;
    const ConvexPotential psi = potential_from(m, 2);
    pr.omega = m.num("omega", 1.0);
    const double g0 = m.num("gamma0", 1.0);
    pr.lift = at_line(ml, "name", [&] { return oscillatory_spec(psi, pr.omega, g0); });
    pr.ws.emplace(psi);
  } else if (fam == "geodesic" || fam == "gradient") {
    pr.family = fam;
    const ConvexPotential psi = potential_from(m, 1);
    const std::string side = m.str("side", "psi");
    if (side != "psi" && side != "phi") throw ParseError("side must be psi or phi", m.line("side"), "side");
    const double g0 = m.num("gamma0", 1.0);
    pr.ws.emplace(psi);
    const DuallyFlatWorkspace& ws = *pr.ws;
    auto sized = [&](Vec v, const std::string& k) {
      if (v.size() != ws.dim()) throw ParseError("'" + k + "' has the wrong dimension", m.line(k), k);
      return v;
    };
    if (fam == "geodesic") {
      pr.from = sized(m.vec("from"), "from");
      pr.to = sized(m.vec("to"), "to");
      pr.lift = at_line(ml, "name", [&] {
        return side == "psi" ? psi_lift(ws, geodesic_drift_psi(ws, pr.from, pr.to), RestoringFunction::linear(g0))
                             : phi_lift(ws, geodesic_drift_phi(ws, pr.from, pr.to), RestoringFunction::linear(g0));
      });
    } else {
      pr.target = sized(m.vec("target"), "target");
      pr.lift = at_line(ml, "name", [&] {
        return side == "psi" ? psi_lift(ws, gradient_drift_psi(ws, pr.target), RestoringFunction::linear(g0))
                             : phi_lift(ws, gradient_drift_phi(ws, pr.target), RestoringFunction::linear(g0));
      });
    }
  } else if (fam == "pythagorean") {
    pr.family = fam;
    const ConvexPotential psi = potential_from(m, 2);
    pr.ws.emplace(psi);
    const int n = pr.ws->dim();
    pr.x1 = m.vec("x1");
    pr.x3 = m.vec("x3");
    if (pr.x1.size() != n) throw ParseError("'x1' has the wrong dimension", m.line("x1"), "x1");
    if (pr.x3.size() != n) throw ParseError("'x3' has the wrong dimension", m.line("x3"), "x3");
    if (m.has("x2") && m.has("corner")) throw ParseError("give either x2 or corner", m.line("corner"), "corner");
    if (m.has("x2")) {
      pr.x2 = m.vec("x2");
      if (pr.x2.size() != n) throw ParseError("'x2' has the wrong dimension", m.line("x2"), "x2");
    } else {
      std::vector<int> slots;
      const std::string c = m.str("corner");
      for (const auto& s : split(c, ',')) {
        const double v = parse_number(s, m.line("corner"), "corner");
        if (v != std::floor(v) || v < 0 || v >= n) throw ParseError("corner slot out of range", m.line("corner"), "corner");
        slots.push_back(static_cast<int>(v));
      }
      pr.x2 = mixed_corner(*pr.ws, pr.x1, pr.x3, slots);
    }
    // A placeholder lift keeps the dimension queries uniform.
    pr.lift = psi_lift(*pr.ws, linear_drift(Mat::Zero(n, n)), RestoringFunction::linear(1.0));
  } else if (fam == "custom") {
    pr.family = fam;
    const ConvexPotential pot = potential_from(m, 1);
    const int n = pot.n;
    const std::string side = m.str("side", "psi");
    if (side != "psi" && side != "phi") throw ParseError("side must be psi or phi", m.line("side"), "side");
    const Mat A = m.mat("A");
    const Vec b = m.has("b") ? m.vec("b") : Vec::Zero(n);
    if (A.rows() != n || A.cols() != n) throw ParseError("A must be n x n", m.line("A"), "A");
    if (b.size() != n) throw ParseError("b must have n entries", m.line("b"), "b");
    const double g0 = m.num("gamma0", 1.0);
    LiftSpec s{side == "psi" ? Side::psi : Side::phi, pot, linear_drift(A, b), RestoringFunction::linear(g0)};
    at_line(ml, "name", [&] { s.validate(); return 0; });
    if (m.has("anchor")) {
      ExtendedLiftSpec e{s, m.num("anchor")};
      at_line(m.line("anchor"), "anchor", [&] { e.validate(); return 0; });
      pr.ext = e;
      pr.extended = true;
    } else {
      pr.lift = s;
    }
    if (side == "psi") pr.ws.emplace(pot);
  } else {
    throw ParseError("unknown model '" + fam + "'", ml, "name");
  }
  m.finish();
  return pr;
}

Vec initial_state(const Scenario& sc, const Problem& pr) {
  Params in(sc.initial, "initial", 0);
  const int n = pr.dim();
  const Side side = pr.base().side;
  const std::string chart_key = side == Side::psi ? "x" : "p";
  auto sized = [&](const std::string& k, int len) {
    const Vec v = in.vec(k);
    if (v.size() != len)
      throw ParseError("'" + k + "' needs " + std::to_string(len) + " entries, got " + std::to_string(v.size()),
                       in.line(k), k);
    return v;
  };
  const bool full = in.has("x") && in.has("p") && in.has("z");

  if (sc.initial.empty() && (pr.family == "geodesic" || pr.family == "gradient")) {
    // Start at the geodesic origin, or at the chart origin for gradient flows.
    Vec chart = pr.family == "geodesic"
                    ? (side == Side::psi ? pr.ws->x_of(pr.from) : pr.ws->p_of(pr.from))
                    : Vec::Zero(n);
    return flatten(lift_embed(*pr.lift, chart));
  }

  Vec y;
  if (!pr.extended) {
    if (full) {
      CanonicalPoint pt(sized("x", n), sized("p", n), in.num("z"));
      y = flatten(pt);
    } else if (in.has(chart_key) && !in.has("z")) {
      y = flatten(at_line(in.line(chart_key), chart_key, [&] { return lift_embed(*pr.lift, sized(chart_key, n)); }));
    } else {
      throw ParseError("[initial] needs x, p and z, or only '" + chart_key + "' for a point on the submanifold",
                       in.line(chart_key), chart_key);
    }
  } else {
    const std::string extra_key = side == Side::psi ? "x_extra" : "p_extra";
    if (full) {
      ExtendedPoint pt;
      pt.x = sized("x", n);
      pt.p = sized("p", n);
      pt.z = in.num("z");
      pt.x_extra = in.num("x_extra", 0.0);
      pt.p_extra = in.has("p_extra") ? in.num("p_extra") : (side == Side::psi ? pr.ext->anchor : 0.0);
      y = flatten_state(pt);
    } else if (in.has(chart_key) && !in.has("z")) {
      const Vec chart = sized(chart_key, n);
      const double extra = in.num(extra_key, 0.0);
      y = flatten_state(at_line(in.line(chart_key), chart_key, [&] { return embed_extended(*pr.ext, chart, extra); }));
    } else {
      throw ParseError("[initial] needs x, p, z (and the extra pair), or only '" + chart_key + "'",
                       in.line(chart_key), chart_key);
    }
  }
  in.finish();
  return y;
}

// Chart trajectory: x on the psi side, p on the phi side.
Vec chart_of(const Problem& pr, const Vec& y) {
  const int n = pr.dim();
  if (!pr.extended) return pr.base().side == Side::psi ? Vec(y.head(n)) : Vec(y.segment(n, n));
  const ExtendedPoint pt = unflatten_state(y, n);
  return pr.base().side == Side::psi ? pt.x : pt.p;
}

double max_rel_exp_error(const Trajectory& tr, const std::vector<double>& q, double rate) {
  const double q0 = q.front();
  double worst = 0.0;
  for (size_t k = 0; k < q.size(); ++k)
    worst = std::max(worst, std::abs(q[k] - q0 * std::exp(rate * (tr.times[k] - tr.times.front()))));
  return worst / std::max(1.0, std::abs(q0));
}

void generic_checks(const Problem& pr, const Trajectory& tr, InvariantReport& rep) {
  const double g0 = pr.base().restoring.gamma0;
  const int n = pr.dim();
  const auto h = column(tr, col_index(tr, "h"));
  rep.add("h_decay", "h(t) = h(0) exp(-gamma0 t)", h.front(), h.back(), max_rel_exp_error(tr, h, -g0), 1e-6);
  const auto d0 = column(tr, col_index(tr, "delta0"));
  rep.add("delta0_decay", "delta0(t) = delta0(0) exp(-gamma0 t)", d0.front(), d0.back(),
          max_rel_exp_error(tr, d0, -g0), 1e-6);

  const int m = pr.extended ? n + 1 : n;
  const ContactHamiltonian H = pr.extended ? extended_hamiltonian(*pr.ext) : build_hamiltonian(*pr.lift);
  const double expected = -(m + 1) * g0;
  double worst = 0.0, last = 0.0;
  for (const Vec* y : {&tr.states.front(), &tr.final_state()}) {
    const CanonicalPoint pt = pr.extended ? flatten_extended(unflatten_state(*y, n)) : unflatten_point(*y, n);
    last = numeric_divergence(H, pt);
    worst = std::max(worst, std::abs(last - expected));
  }
  rep.add("compressibility", "div X_h = -(dim + 1) gamma0", expected, last, worst, 1e-5);

  const auto dn = column(tr, col_index(tr, "delta_norm"));
  if (d0.front() == 0.0 && dn.front() == 0.0) {
    double drift = 0.0;
    for (size_t k = 0; k < dn.size(); ++k) drift = std::max({drift, std::abs(d0[k]), dn[k]});
    rep.add("stays_on_submanifold", "delta0 = 0 and delta = 0 along the flow", 0.0, drift, drift, 1e-8);
  }
}

void circuit_checks(const Problem& pr, const Trajectory& tr, InvariantReport& rep) {
  const CircuitParams& c = pr.circuit;
  const Vec y0 = chart_of(pr, tr.states.front());
  if (pr.default_potential) {
    Mat A(1, 1);
    if (pr.family == "rc") A(0, 0) = -1.0 / (c.R * c.C);
    if (pr.family == "rl") A(0, 0) = -c.R / c.L;
    if (pr.family == "rlc") {
      A.resize(2, 2);
      if (pr.extended)
        A << 0.0, 1.0 / c.L, -1.0 / c.C, -c.R / c.L;
      else
        A << 0.0, 1.0 / c.C, -1.0 / c.L, -c.R / c.L;
    }
    double worst = 0.0;
    for (size_t k = 0; k < tr.times.size(); ++k) {
      const Mat E = (A * (tr.times[k] - tr.times.front())).exp();
      worst = std::max(worst, (chart_of(pr, tr.states[k]) - E * y0).cwiseAbs().maxCoeff());
    }
    rep.add("closed_form", "chart coordinates follow exp(A t) y(0)", 0.0, worst, worst, 1e-8);
  }
  if (pr.family == "rlc" && !pr.extended && c.R == 0.0) {
    const ConvexPotential& phi = pr.lift->potential;
    const double e0 = phi.value(y0);
    double worst = 0.0;
    for (const auto& y : tr.states) worst = std::max(worst, std::abs(phi.value(chart_of(pr, y)) - e0));
    rep.add("energy_conservation", "H*(V, I) constant for R = 0", e0, e0 + worst, worst / std::max(1.0, e0), 1e-9);
  }
  if (!pr.extended) return;

  const double T = tr.times.back() - tr.times.front();
  const auto H = column(tr, col_index(tr, "H_tot"));
  double drift = 0.0;
  for (double v : H) drift = std::max(drift, std::abs(v - H.front()));
  rep.add("H_tot_conservation", "H_tot = H + T0 S constant (drift per unit time)", H.front(), H.back(), drift / T,
          1e-9);

  // dS/dt from the field against the dissipated power over T0.
  const ConvexPotential& psi = pr.ext->base.potential;
  double worst = 0.0, min_rate = INFINITY, min_power = INFINITY;
  bool strict = true;
  for (const auto& y : tr.states) {
    const ExtendedPoint pt = unflatten_state(y, pr.dim());
    const double rate = extended_lifted_field(*pr.ext, pt).dx_extra;
    const Vec g = psi.gradient(pt.x);
    double power = 0.0;
    if (pr.family == "rc") power = g(0) * g(0) / c.R;
    if (pr.family == "rl") power = c.R * g(0) * g(0);
    if (pr.family == "rlc") power = c.R * g(1) * g(1);
    if (!pr.default_potential) power = -g.dot(pr.ext->base.drift.eval(pt.x));
    worst = std::max(worst, std::abs(rate - power / c.T0));
    min_rate = std::min(min_rate, rate);
    min_power = std::min(min_power, power);
    if (power > 0.0 && !(rate > 0.0)) strict = false;
  }
  rep.add("entropy_rate", "dS/dt = (dissipated power) / T0 pointwise", 0.0, worst, worst, 1e-9);
  rep.add_condition("entropy_increasing", "dS/dt > 0 wherever the dissipated power is nonzero", min_rate,
                    strict && min_rate >= 0.0);
  const auto S = column(tr, col_index(tr, "S"));
  const LineFit f = fit_line(tr.times, S);
  rep.add_condition("entropy_slope", "fitted dS/dt > 0", f.slope, f.slope > 0.0);
}

std::vector<Vec> sample_charts(const Problem& pr, const Trajectory& tr, size_t count = 20) {
  std::vector<Vec> out;
  const size_t stride = std::max<size_t>(1, tr.states.size() / count);
  for (size_t k = 0; k < tr.states.size(); k += stride) out.push_back(chart_of(pr, tr.states[k]));
  return out;
}

void certificate_check(const LiftSpec& spec, StabilityQuery q, InvariantReport& rep) {
  const StabilityVerdict v = stability_certificate(spec, q);
  rep.add_condition("certificate", "stability certificate is conclusive (" + to_string(v.verdict) + ")",
                    v.min_eigenvalue, v.verdict != Verdict::inconclusive);
}

void spin_checks(const Problem& pr, const Trajectory& tr, InvariantReport& rep) {
  const SpinParams& s = pr.spin;
  const double x0 = tr.states.front()(0);
  double worst = 0.0;
  for (size_t k = 0; k < tr.times.size(); ++k) {
    const double t = tr.times[k] - tr.times.front();
    worst = std::max(worst, std::abs(tr.states[k](0) - ((x0 - s.theta) * std::exp(-s.lambda0 * t) + s.theta)));
  }
  rep.add("x_closed_form", "x(t) = (x(0) - theta) exp(-lambda0 t) + theta", 0.0, worst, worst, 1e-8);

  std::vector<double> d0, d1;
  for (const auto& y : tr.states) {
    const Deltas d = lift_deltas(*pr.lift, unflatten_point(y, 1));
    d0.push_back(d.d0);
    d1.push_back(d.d(0));
  }
  if (d0.front() != 0.0) {
    const LineFit f = fit_log_rate(tr.times, d0);
    rep.add("delta0_rate", "fitted log-rate of delta0 equals -gamma0", -s.gamma0, f.slope,
            std::abs(f.slope + s.gamma0), 1e-4);
  }
  if (d1.front() != 0.0) {
    const double law = s.lambda0 - s.gamma0;
    const LineFit f = fit_log_rate(tr.times, d1);
    rep.add("delta1_rate", "fitted log-rate of delta1 equals lambda0 - gamma0", law, f.slope, std::abs(f.slope - law),
            1e-4);
  }
  StabilityQuery q{LinearJacobianClass{-s.lambda0}, sample_charts(pr, tr)};
  certificate_check(*pr.lift, q, rep);
}

void onsager_checks(const Problem& pr, const Trajectory& tr, InvariantReport& rep) {
  const DuallyFlatWorkspace& ws = *pr.ws;
  if (!pr.U_center) {
    const Vec p0 = ws.p_of(chart_of(pr, tr.states.front()));
    double worst = 0.0;
    for (size_t k = 0; k < tr.times.size(); ++k) {
      const Vec p = ws.p_of(chart_of(pr, tr.states[k]));
      worst = std::max(worst, (p - p0 * std::exp(-(tr.times[k] - tr.times.front()))).cwiseAbs().maxCoeff());
    }
    rep.add("dual_closed_form", "p(t) = p(0) exp(-t) for grad psi = M x", 0.0, worst, worst, 1e-8);
  } else {
    const double err = (chart_of(pr, tr.final_state()) - *pr.U_center).cwiseAbs().maxCoeff();
    rep.add("fixed_point", "x(t_end) reaches the minimum of U", 0.0, err, err, 1e-6);
  }
  certificate_check(*pr.lift, onsager_query(*pr.onsager, sample_charts(pr, tr)), rep);
}

void oscillatory_checks(const Problem& pr, const Trajectory& tr, InvariantReport& rep) {
  const auto dn = column(tr, col_index(tr, "delta_norm"));
  if (dn.front() > 0.0) {
    const double g0 = pr.lift->restoring.gamma0;
    rep.add("delta_norm_decay", "|delta(t)| = |delta(0)| exp(-gamma0 t)", dn.front(), dn.back(),
            max_rel_exp_error(tr, dn, -g0) / std::max(1e-300, std::min(1.0, dn.front())), 1e-6);
  }
  certificate_check(*pr.lift, StabilityQuery{RotationalClass{pr.omega}, sample_charts(pr, tr)}, rep);
}

void geodesic_checks(const Problem& pr, const Trajectory& tr, InvariantReport& rep) {
  const DuallyFlatWorkspace& ws = *pr.ws;
  const bool psi_side = pr.lift->side == Side::psi;
  const int n = pr.dim();
  // The affine coordinate of the geodesic: p on the psi side, x on the phi side.
  std::vector<Vec> aff;
  for (const auto& y : tr.states) {
    const Vec c = chart_of(pr, y);
    aff.push_back(psi_side ? ws.p_of(c) : ws.x_of(c));
  }
  const std::string coord = psi_side ? "p" : "x";
  if (pr.family == "geodesic") {
    double worst = 0.0;
    for (int a = 0; a < n; ++a) {
      std::vector<double> comp;
      for (const auto& v : aff) comp.push_back(v(a));
      worst = std::max(worst, fit_line(tr.times, comp).max_residual);
    }
    rep.add("affine_linearity", coord + "(t) is linear in t", 0.0, worst, worst, 1e-8);
    const double t = tr.times.back() - tr.times.front();
    const Vec expect = aff.front() + t * (pr.to - pr.from);
    const double err = (aff.back() - expect).cwiseAbs().maxCoeff();
    rep.add("geodesic_endpoint", coord + "(t) = " + coord + "(0) + t (to - from)", 0.0, err, err, 1e-8);
    return;
  }
  const Vec tgt = psi_side ? ws.p_of(pr.target) : ws.x_of(pr.target);
  double worst = 0.0;
  for (size_t k = 0; k < aff.size(); ++k) {
    const double e = std::exp(-(tr.times[k] - tr.times.front()));
    worst = std::max(worst, (aff[k] - tgt - (aff.front() - tgt) * e).cwiseAbs().maxCoeff());
  }
  rep.add("gradient_closed_form", coord + "(t) - " + coord + "' = (" + coord + "(0) - " + coord + "') exp(-t)", 0.0,
          worst, worst, 1e-8);
  // Divergence to the target along the flow.
  std::vector<double> D;
  for (const auto& y : tr.states) {
    const Vec c = chart_of(pr, y);
    D.push_back(psi_side ? canonical_divergence(ws, c, pr.target)
                         : canonical_divergence(ws, ws.x_of(pr.target), ws.x_of(c)));
  }
  double rise = 0.0;
  for (size_t k = 1; k < D.size(); ++k) rise = std::max(rise, D[k] - D[k - 1]);
  rep.add_condition("divergence_monotone", "divergence to the target is nonincreasing at every step", rise,
                    rise <= 0.0);
}

void apply_tol(InvariantReport& rep, const std::optional<double>& tol) {
  if (!tol) return;
  for (auto& c : rep.checks) {
    if (c.condition) continue;
    c.tol = *tol;
    c.pass = std::isfinite(c.residual) && c.residual <= c.tol;
  }
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw MalformedInput("cannot write " + tmp.string());
    f << content;
    if (!f) throw MalformedInput("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

double scenario_number(const ScenarioEntry& e, const std::string& field) {
  return parse_number(e.value, e.line, field);
}

Vec scenario_vector(const ScenarioEntry& e, const std::string& field) {
  if (e.value.find(';') != std::string::npos) throw ParseError("expected a vector, got a matrix", e.line, field);
  const auto parts = split(e.value, ',');
  Vec v(static_cast<Eigen::Index>(parts.size()));
  for (size_t i = 0; i < parts.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_number(parts[i], e.line, field);
  return v;
}

Mat scenario_matrix(const ScenarioEntry& e, const std::string& field) {
  const auto rows = split(e.value, ';');
  std::vector<std::vector<double>> vals;
  for (const auto& r : rows) {
    std::vector<double> row;
    for (const auto& s : split(r, ',')) row.push_back(parse_number(s, e.line, field));
    if (!vals.empty() && row.size() != vals.front().size())
      throw ParseError("matrix rows have different lengths", e.line, field);
    vals.push_back(std::move(row));
  }
  Mat M(static_cast<Eigen::Index>(vals.size()), static_cast<Eigen::Index>(vals.front().size()));
  for (size_t i = 0; i < vals.size(); ++i)
    for (size_t j = 0; j < vals[i].size(); ++j) M(i, j) = vals[i][j];
  return M;
}

ConvexPotential named_potential(const std::string& name, int n, const std::optional<Mat>& M) {
  if (n < 1) throw MalformedInput("potential dimension must be positive");
  if (name == "quadratic") {
    if (M && (M->rows() != n || M->cols() != n)) throw MalformedInput("quadratic: M does not match n");
    return potentials::quadratic(M ? *M : Mat::Identity(n, n));
  }
  if (M) throw MalformedInput(name + " takes no matrix");
  if (name == "log_cosh") {
    if (n != 1) throw MalformedInput("log_cosh is one-dimensional; use spin_product");
    return potentials::log_cosh();
  }
  if (name == "spin_product") return potentials::spin_product(n);
  throw MalformedInput("unknown potential '" + name + "' (quadratic, log_cosh, spin_product)");
}

Scenario parse_scenario(std::istream& in, const std::string& source) {
  std::map<std::string, ScenarioSection> sections;
  std::map<std::string, int> header_line;
  std::string current, raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ParseError("unterminated section header", line, "section");
      current = trim(s.substr(1, s.size() - 2));
      if (current != "model" && current != "initial" && current != "integrator" && current != "outputs")
        throw ParseError("unknown section [" + current + "]", line, "section");
      if (header_line.count(current)) throw ParseError("duplicate section [" + current + "]", line, "section");
      header_line[current] = line;
      sections[current];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line, s);
    const std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
    if (current.empty()) throw ParseError("key outside of any section", line, key);
    if (key.empty()) throw ParseError("empty key", line, key);
    if (value.empty()) throw ParseError("empty value", line, key);
    auto& sec = sections[current];
    if (sec.count(key)) throw ParseError("duplicate key '" + key + "'", line, key);
    sec[key] = ScenarioEntry{value, line};
  }
  if (in.bad()) throw ParseError("read error", line, "");

  Scenario sc;
  sc.source = source;
  if (!sections.count("model")) throw ParseError("missing [model] section", line, "model");
  auto& model = sections["model"];
  if (!model.count("name")) throw ParseError("[model] needs a name", header_line["model"], "name");
  sc.model = model["name"].value;
  sc.model_line = model["name"].line;
  model.erase("name");
  sc.model_params = model;
  sc.initial = sections["initial"];

  const auto& integ = sections["integrator"];
  for (const auto& [k, e] : integ)
    if (!integrator_keys.count(k)) throw ParseError("unknown key '" + k + "' in [integrator]", e.line, k);
  auto num = [&](const char* k, double& slot) {
    if (integ.count(k)) slot = scenario_number(integ.at(k), k);
  };
  if (integ.count("method")) {
    const std::string m = integ.at("method").value;
    if (m == "rk4")
      sc.integrator.method = Method::rk4;
    else if (m == "rkf45")
      sc.integrator.method = Method::rkf45;
    else
      throw ParseError("method must be rk4 or rkf45", integ.at("method").line, "method");
  }
  num("step", sc.integrator.step);
  num("rel_tol", sc.integrator.rel_tol);
  num("abs_tol", sc.integrator.abs_tol);
  num("min_step", sc.integrator.min_step);
  num("output_dt", sc.integrator.output_dt);
  num("t_end", sc.t_end);
  if (integ.count("max_steps")) {
    const double v = scenario_number(integ.at("max_steps"), "max_steps");
    if (v < 1 || v != std::floor(v)) throw ParseError("max_steps must be a positive integer", integ.at("max_steps").line, "max_steps");
    sc.integrator.max_steps = static_cast<long>(v);
  }
  const int il = header_line.count("integrator") ? header_line["integrator"] : 0;
  auto field_line = [&](const char* k) { return integ.count(k) ? integ.at(k).line : il; };
  if (!(sc.t_end > 0.0)) throw ParseError("t_end must be positive", field_line("t_end"), "t_end");
  if (!(sc.integrator.step > 0.0)) throw ParseError("step must be positive", field_line("step"), "step");
  if (!(sc.integrator.rel_tol > 0.0)) throw ParseError("rel_tol must be positive", field_line("rel_tol"), "rel_tol");
  if (!(sc.integrator.abs_tol > 0.0)) throw ParseError("abs_tol must be positive", field_line("abs_tol"), "abs_tol");
  if (!(sc.integrator.min_step > 0.0)) throw ParseError("min_step must be positive", field_line("min_step"), "min_step");
  if (sc.integrator.output_dt < 0.0)
    throw ParseError("output_dt must be non-negative", field_line("output_dt"), "output_dt");

  const auto& outs = sections["outputs"];
  for (const auto& [k, e] : outs)
    if (!output_keys.count(k)) throw ParseError("unknown key '" + k + "' in [outputs]", e.line, k);
  auto out = [&](const char* k, std::string& slot) {
    if (outs.count(k)) slot = outs.at(k).value;
  };
  out("trajectory_csv", sc.trajectory_csv);
  out("invariant_report", sc.invariant_report);
  out("divergence_table", sc.divergence_table);
  out("divergence_grid", sc.divergence_grid);
  if (!sc.divergence_table.empty() && sc.divergence_grid.empty())
    throw ParseError("divergence_table needs divergence_grid", outs.at("divergence_table").line, "divergence_grid");
  if (!sc.divergence_grid.empty()) {
    try {
      parse_grid(sc.divergence_grid);
    } catch (const MalformedInput& e) {
      throw ParseError(e.what(), outs.at("divergence_grid").line, "divergence_grid");
    }
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path.string(), 0, "path");
  return parse_scenario(f, path.string());
}

RunResult run_scenario(const Scenario& sc, const RunOptions& opts) {
  Problem pr = build_problem(sc);
  RunResult res;
  const int n = pr.dim();

  std::optional<DivergenceTable> table;
  if (!sc.divergence_table.empty()) {
    if (!pr.ws) throw ParseError("divergence_table needs a psi-side model", 0, "divergence_table");
    const auto pts = grid_points(parse_grid(sc.divergence_grid));
    if (pts.front().size() != n) throw ParseError("divergence_grid dimension does not match the model", 0, "divergence_grid");
    table = divergence_table(*pr.ws, pts);
  }

  if (pr.family == "pythagorean") {
    if (!sc.trajectory_csv.empty()) throw ParseError("pythagorean scenarios produce no trajectory", 0, "trajectory_csv");
    if (!sc.initial.empty()) throw ParseError("pythagorean scenarios take no [initial]", 0, "initial");
    PythagoreanOptions po;
    po.integrator = sc.integrator;
    try {
      const PythagoreanResult r = pythagorean_check(*pr.ws, pr.x1, pr.x2, pr.x3, po);
      res.report.add_condition("orthogonality", "(x3 - x2).(p1 - p2) = 0 at the corner", r.orthogonality, true);
      res.report.add("geodesic_endpoints", "unit-time flows land on the supplied points", 0.0, r.endpoint_error,
                     r.endpoint_error, po.endpoint_tol);
      res.report.add("pythagorean_identity", "D(3||1) = D(3||2) + D(2||1)", r.d31, r.d32 + r.d21, r.residual, 1e-8);
    } catch (const NotPythagorean& e) {
      res.report.add_condition("orthogonality", e.what(), 0.0, false);
    } catch (const NumericalAbort& e) {
      res.exit_code = exit_numerical;
      res.message = e.what();
      return res;
    }
  } else {
    const Vec y0 = initial_state(sc, pr);
    const System f = pr.extended ? extended_system(*pr.ext) : lifted_system(*pr.lift);
    const DiagnosticSet ds = pr.extended ? extended_diagnostics(*pr.ext, pr.family == "rc" || pr.family == "rl" ||
                                                                           pr.family == "rlc")
                                         : lift_diagnostics(*pr.lift);
    res.state_names = state_names(n, pr.extended);
    res.trajectory = integrate(f, y0, 0.0, sc.t_end, sc.integrator, ds.names, ds.fn);
    if (!res.trajectory.ok()) {
      res.exit_code = exit_numerical;
      res.message = res.trajectory.message;
      return res;
    }
    if (opts.run_checks) {
      const Trajectory& tr = res.trajectory;
      generic_checks(pr, tr, res.report);
      if (pr.family == "rc" || pr.family == "rl" || pr.family == "rlc") circuit_checks(pr, tr, res.report);
      if (pr.family == "spin") spin_checks(pr, tr, res.report);
      if (pr.family == "onsager") onsager_checks(pr, tr, res.report);
      if (pr.family == "oscillatory") oscillatory_checks(pr, tr, res.report);
      if (pr.family == "geodesic" || pr.family == "gradient") geodesic_checks(pr, tr, res.report);
      if (pr.extended && pr.family == "custom") {
        const auto g = column(tr, col_index(tr, pr.ext->base.side == Side::psi ? "psi_tilde" : "phi_tilde"));
        double drift = 0.0;
        for (double v : g) drift = std::max(drift, std::abs(v - g.front()));
        res.report.add("generating_conservation", "extended generating function constant (drift per unit time)",
                       g.front(), g.back(), drift / sc.t_end, 1e-9);
      }
    }
  }
  apply_tol(res.report, opts.tol);
  res.exit_code = res.report.all_pass() ? exit_pass : exit_check_failed;

  if (opts.write_artifacts) {
    if (!sc.trajectory_csv.empty()) {
      std::ostringstream os;
      write_trajectory_csv(os, res.trajectory, res.state_names);
      write_atomic(opts.out_dir / sc.trajectory_csv, os.str());
    }
    if (!sc.invariant_report.empty()) {
      std::ostringstream os;
      os << "scenario: " << sc.source << "\nmodel: " << sc.model << "\n";
      write_report(os, res.report);
      write_atomic(opts.out_dir / sc.invariant_report, os.str());
    }
    if (table) {
      std::ostringstream os;
      write_divergence_csv(os, *table);
      write_atomic(opts.out_dir / sc.divergence_table, os.str());
    }
  }
  return res;
}

int run_scenario_file(const std::filesystem::path& path, const RunOptions& opts, std::ostream& out,
                      std::ostream& err) {
  try {
    const Scenario sc = load_scenario(path);
    const RunResult r = run_scenario(sc, opts);
    if (r.exit_code == exit_numerical) {
      err << path.string() << ": numerical abort: " << r.message << "\n";
      return r.exit_code;
    }
    if (opts.run_checks) write_report(out, r.report);
    return r.exit_code;
  } catch (const ParseError& e) {
    err << path.string() << ":" << e.line << ": " << (e.field.empty() ? "" : "field '" + e.field + "': ") << e.what()
        << "\n";
    return exit_usage;
  } catch (const MalformedInput& e) {
    err << path.string() << ": " << e.what() << "\n";
    return exit_usage;
  } catch (const ConvexityError& e) {
    err << path.string() << ": " << e.what() << "\n";
    return exit_usage;
  } catch (const Error& e) {
    err << path.string() << ": numerical abort: " << e.what() << "\n";
    return exit_numerical;
  } catch (const std::exception& e) {
    err << path.string() << ": " << e.what() << "\n";
    return exit_numerical;
  }
}

}  // namespace cflow
