#include "contactflow/integrate.hpp"

#include <cmath>
#include <sstream>

#include <boost/numeric/odeint.hpp>

namespace cflow {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;

struct NonFiniteField {
  std::string what;
};

// Runge-Kutta-Fehlberg 4(5) with local extrapolation: the 5th-order solution
// advances the state and the 4th-order one supplies the error estimate, which
// therefore over-estimates the error actually committed.
template <size_t N>
using Coeffs = boost::array<double, N>;

struct Fehlberg45 : odeint::explicit_error_generic_rk<6, 4, 4, 5, State> {
  using base = odeint::explicit_error_generic_rk<6, 4, 4, 5, State>;

  static Coeffs<6> b4() { return {{25.0 / 216, 0.0, 1408.0 / 2565, 2197.0 / 4104, -1.0 / 5, 0.0}}; }
  static Coeffs<6> b5() { return {{16.0 / 135, 0.0, 6656.0 / 12825, 28561.0 / 56430, -9.0 / 50, 2.0 / 55}}; }
  static Coeffs<6> db() {
    Coeffs<6> d;
    const auto a = b4(), b = b5();
    for (size_t i = 0; i < 6; ++i) d[i] = a[i] - b[i];
    return d;
  }

  Fehlberg45()
      : base(boost::fusion::make_vector(Coeffs<1>{{1.0 / 4}}, Coeffs<2>{{3.0 / 32, 9.0 / 32}},
                                        Coeffs<3>{{1932.0 / 2197, -7200.0 / 2197, 7296.0 / 2197}},
                                        Coeffs<4>{{439.0 / 216, -8.0, 3680.0 / 513, -845.0 / 4104}},
                                        Coeffs<5>{{-8.0 / 27, 2.0, -3544.0 / 2565, 1859.0 / 4104, -11.0 / 40}}),
             b5(), db(), Coeffs<6>{{0.0, 1.0 / 4, 3.0 / 8, 12.0 / 13, 1.0, 1.0 / 2}}) {}
};

struct Rhs {
  const System* f;
  void operator()(const State& x, State& dxdt, double) const {
    const Eigen::Map<const Vec> xm(x.data(), static_cast<Eigen::Index>(x.size()));
    const Vec r = (*f)(xm);
    if (r.size() != xm.size()) throw MalformedInput("vector field returned the wrong dimension");
    if (!r.allFinite()) throw NonFiniteField{"vector field is not finite"};
    dxdt.assign(r.data(), r.data() + r.size());
  }
};

Vec to_vec(const State& s) { return Eigen::Map<const Vec>(s.data(), static_cast<Eigen::Index>(s.size())); }

class Recorder {
 public:
  Recorder(Trajectory& tr, const Diagnostics& d) : tr_(tr), d_(d) {}
  void operator()(double t, const State& s) {
    Vec y = to_vec(s);
    if (d_) tr_.diagnostics.push_back(d_(t, y));
    tr_.times.push_back(t);
    tr_.states.push_back(std::move(y));
  }

 private:
  Trajectory& tr_;
  const Diagnostics& d_;
};

void run_rk4(const Rhs& rhs, State& x, double t0, double t1, const IntegratorConfig& cfg, Recorder& rec,
             Trajectory& tr) {
  odeint::runge_kutta4<State> stepper;
  const long steps = std::max(1L, static_cast<long>(std::ceil((t1 - t0) / cfg.step - 1e-9)));
  if (steps > cfg.max_steps) throw MalformedInput("rk4: step count exceeds max_steps");
  const double dt = (t1 - t0) / static_cast<double>(steps);
  long stride = 1;
  if (cfg.output_dt > 0.0) stride = std::max(1L, std::lround(cfg.output_dt / dt));
  for (long k = 1; k <= steps; ++k) {
    State next = x;
    stepper.do_step(rhs, next, t0 + (k - 1) * dt, dt);
    for (double v : next)
      if (!std::isfinite(v)) throw NonFiniteField{"state became non-finite"};
    x = std::move(next);
    ++tr.accepted;
    const double t = k == steps ? t1 : t0 + k * dt;
    if (k % stride == 0 || k == steps) rec(t, x);
  }
}

void run_rkf45(const Rhs& rhs, State& x, double t0, double t1, const IntegratorConfig& cfg, Recorder& rec,
               Trajectory& tr) {
  using Checker = odeint::default_error_checker<double, odeint::range_algebra, odeint::default_operations>;
  odeint::controlled_runge_kutta<Fehlberg45> stepper(Checker(cfg.abs_tol, cfg.rel_tol));
  double t = t0;
  double dt = std::min(cfg.step, t1 - t0);
  std::vector<double> targets;
  if (cfg.output_dt > 0.0) {
    const long m = std::max(1L, static_cast<long>(std::ceil((t1 - t0) / cfg.output_dt - 1e-9)));
    for (long k = 1; k < m; ++k) targets.push_back(t0 + k * cfg.output_dt);
  }
  targets.push_back(t1);
  size_t next_target = 0;
  long steps = 0;
  while (next_target < targets.size()) {
    const double target = targets[next_target];
    const double remaining = target - t;
    const bool clamp = dt >= remaining;
    const double proposed = dt;
    double h = clamp ? remaining : dt;
    State trial = x;
    double tt = t;
    const auto res = stepper.try_step(rhs, trial, tt, h);
    if (++steps > cfg.max_steps) {
      tr.status = TrajectoryStatus::truncated;
      tr.message = "rkf45: exceeded max_steps";
      return;
    }
    if (res == odeint::success) {
      x = std::move(trial);
      ++tr.accepted;
      const bool landed = clamp;
      t = landed ? target : tt;
      dt = landed ? std::max(h, proposed) : h;
      if (landed) {
        ++next_target;
        rec(t, x);
      } else if (cfg.output_dt <= 0.0) {
        rec(t, x);
      }
    } else {
      ++tr.rejected;
      dt = h;
      if (dt < cfg.min_step * std::max(1.0, std::abs(t))) {
        std::ostringstream os;
        os << "rkf45: step size fell below the floor at t = " << t;
        tr.status = TrajectoryStatus::truncated;
        tr.message = os.str();
        return;
      }
    }
  }
}

}  // namespace

void validate(const IntegratorConfig& cfg) {
  if (!(cfg.step > 0.0)) throw MalformedInput("integrator step must be positive");
  if (cfg.method == Method::rkf45 && (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0)))
    throw MalformedInput("integrator tolerances must be positive");
  if (!(cfg.min_step > 0.0)) throw MalformedInput("integrator step floor must be positive");
  if (cfg.output_dt < 0.0) throw MalformedInput("output interval must be non-negative");
}

Trajectory integrate(const System& f, const Vec& y0, double t0, double t1, const IntegratorConfig& cfg,
                     const std::vector<std::string>& diagnostic_names, const Diagnostics& diag) {
  validate(cfg);
  if (!(t1 > t0)) throw MalformedInput("integration needs t1 > t0");
  if (!y0.allFinite()) throw MalformedInput("initial state is not finite");
  Trajectory tr;
  tr.diagnostic_names = diagnostic_names;
  Recorder rec(tr, diag);
  State x(y0.data(), y0.data() + y0.size());
  const Rhs rhs{&f};
  try {
    rec(t0, x);
    if (cfg.method == Method::rk4)
      run_rk4(rhs, x, t0, t1, cfg, rec, tr);
    else
      run_rkf45(rhs, x, t0, t1, cfg, rec, tr);
  } catch (const NonFiniteField& e) {
    tr.status = TrajectoryStatus::aborted;
    tr.message = e.what;
  } catch (const MalformedInput&) {
    throw;
  } catch (const Error& e) {
    tr.status = TrajectoryStatus::aborted;
    tr.message = e.what();
  }
  if (tr.states.empty()) throw NumericalAbort("integration failed at the initial state: " + tr.message);
  return tr;
}

Vec flow(const System& f, const Vec& y0, double t, const IntegratorConfig& cfg) {
  IntegratorConfig c = cfg;
  c.output_dt = 0.0;
  const Trajectory tr = integrate(f, y0, 0.0, t, c);
  if (!tr.ok()) throw NumericalAbort(tr.message);
  return tr.final_state();
}

}  // namespace cflow
