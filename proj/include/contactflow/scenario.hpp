#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "contactflow/flows.hpp"
#include "contactflow/report.hpp"

namespace cflow {

struct ScenarioEntry {
  std::string value;
  int line = 0;
};

using ScenarioSection = std::map<std::string, ScenarioEntry>;

struct Scenario {
  std::string source;  // file name for messages
  std::string model;
  int model_line = 0;
  ScenarioSection model_params;  // everything in [model] except name
  ScenarioSection initial;
  double t_end = 1.0;
  IntegratorConfig integrator;
  std::string trajectory_csv;
  std::string invariant_report;
  std::string divergence_table;
  std::string divergence_grid;  // lo:hi:count per axis
};

// Sections: [model] [initial] [integrator] [outputs]. Lines are key = value;
// '#' starts a comment. Vectors are comma separated, matrix rows ';' separated.
// Throws ParseError with the offending line and field.
Scenario parse_scenario(std::istream& in, const std::string& source = "<input>");
Scenario load_scenario(const std::filesystem::path& path);

// Typed accessors used by the model builders; errors carry the entry's line.
double scenario_number(const ScenarioEntry& e, const std::string& field);
Vec scenario_vector(const ScenarioEntry& e, const std::string& field);
Mat scenario_matrix(const ScenarioEntry& e, const std::string& field);

// Potentials addressable by name: quadratic (matrix M, default identity of
// size n), log_cosh, spin_product (size n).
ConvexPotential named_potential(const std::string& name, int n, const std::optional<Mat>& M = std::nullopt);

enum ExitCode { exit_pass = 0, exit_check_failed = 1, exit_usage = 2, exit_numerical = 3 };

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::optional<double> tol;  // replaces every numeric check tolerance
  bool write_artifacts = true;
  bool run_checks = true;
};

struct RunResult {
  int exit_code = exit_pass;
  std::string message;
  InvariantReport report;
  Trajectory trajectory;
  std::vector<std::string> state_names;
};

// Builds the model, integrates, runs its checks and writes the requested
// artifacts. Parse and model errors are thrown; numerical trouble is reported
// through exit_code. Artifacts are written only when the run completes.
RunResult run_scenario(const Scenario& sc, const RunOptions& opts = {});

// File-level wrapper: never throws, logs to err, returns the exit code.
int run_scenario_file(const std::filesystem::path& path, const RunOptions& opts, std::ostream& out,
                      std::ostream& err);

}  // namespace cflow
