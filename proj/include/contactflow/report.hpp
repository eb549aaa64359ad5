#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "contactflow/integrate.hpp"
#include "contactflow/legendre.hpp"

namespace cflow {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;  // largest |y - (slope t + intercept)|
  int samples = 0;
};

// Least squares over all samples.
LineFit fit_line(const std::vector<double>& t, const std::vector<double>& y);

// Least squares of log|q| against t over the second half of the samples.
// Zero entries are skipped; fewer than two usable samples throw MalformedInput.
LineFit fit_log_rate(const std::vector<double>& t, const std::vector<double>& q);

struct CheckResult {
  std::string name;
  std::string expected;  // the law being checked, in words
  double expected_value = 0.0;
  double fitted = 0.0;
  double residual = 0.0;  // compared against tol
  double tol = 0.0;
  bool pass = false;
  bool condition = false;  // qualitative: fitted holds the measured value, tol is unused
};

struct InvariantReport {
  std::vector<CheckResult> checks;

  // Adds a check that passes iff residual <= tol. Names must be unique.
  void add(std::string name, std::string expected, double expected_value, double fitted, double residual,
           double tol);
  // Adds a qualitative check (e.g. a strict sign condition) with its measured value.
  void add_condition(std::string name, std::string expected, double value, bool holds);
  bool all_pass() const;
};

void write_report(std::ostream& os, const InvariantReport& report);

// Header: t, state names, then diagnostic names. Values written with %.17g.
void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const std::vector<std::string>& state_names);

struct DivergenceCell {
  int i = 0, j = 0;
  double d_ij = 0.0;  // D(xi_i || xi_j)
  double d_ji = 0.0;
  double asymmetry = 0.0;  // d_ij - d_ji
  std::string error;       // empty on success
};

struct DivergenceTable {
  std::vector<Vec> points;
  std::vector<DivergenceCell> cells;  // row-major over all ordered pairs
};

// Cells whose Legendre transforms fail carry the message instead of values.
DivergenceTable divergence_table(const DuallyFlatWorkspace& ws, const std::vector<Vec>& points);

void write_divergence_csv(std::ostream& os, const DivergenceTable& table);

// Product grid from per-axis "lo:hi:count" specs.
struct GridAxis {
  double lo = 0.0, hi = 0.0;
  int count = 1;
};
std::vector<GridAxis> parse_grid(const std::string& spec);
std::vector<Vec> grid_points(const std::vector<GridAxis>& axes);

}  // namespace cflow
