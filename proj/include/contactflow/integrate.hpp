#pragma once

#include <functional>
#include <string>
#include <vector>

#include "contactflow/geometry.hpp"

namespace cflow {

enum class Method { rk4, rkf45 };

struct IntegratorConfig {
  Method method = Method::rkf45;
  double step = 1e-3;          // rk4 fixed step; rkf45 initial step
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double min_step = 1e-13;     // rkf45 floor, relative to max(1, |t|)
  long max_steps = 50'000'000;
  double output_dt = 0.0;      // > 0 records on a uniform grid instead of every accepted step
};

// Autonomous vector field on a flat state.
using System = std::function<Vec(const Vec&)>;
using Diagnostics = std::function<std::vector<double>(double, const Vec&)>;

enum class TrajectoryStatus { complete, truncated, aborted };

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<std::string> diagnostic_names;
  std::vector<std::vector<double>> diagnostics;  // one row per recorded state
  TrajectoryStatus status = TrajectoryStatus::complete;
  std::string message;
  long accepted = 0;
  long rejected = 0;

  const Vec& final_state() const { return states.back(); }
  double final_time() const { return times.back(); }
  bool ok() const { return status == TrajectoryStatus::complete; }
};

void validate(const IntegratorConfig& cfg);

// Integrates from t0 to t1. A NaN aborts with the last good state kept;
// hitting the rkf45 step floor truncates. Diagnostics are evaluated at every
// recorded state.
Trajectory integrate(const System& f, const Vec& y0, double t0, double t1, const IntegratorConfig& cfg = {},
                     const std::vector<std::string>& diagnostic_names = {}, const Diagnostics& diag = {});

// Endpoint of the flow; throws NumericalAbort if the trajectory is not complete.
Vec flow(const System& f, const Vec& y0, double t, const IntegratorConfig& cfg = {});

}  // namespace cflow
