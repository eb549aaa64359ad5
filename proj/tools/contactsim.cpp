#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "contactflow/scenario.hpp"

using namespace cflow;

namespace {

std::optional<Mat> parse_matrix_arg(const std::string& text) {
  if (text.empty()) return std::nullopt;
  return scenario_matrix(ScenarioEntry{text, 0}, "--M");
}

void print_vec(std::ostream& os, const char* key, const Vec& v) {
  os << key << " =";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v(i));
    os << (i ? ", " : " ") << buf;
  }
  os << "\n";
}

int run_legendre(const std::string& name, const std::string& p_text, const std::string& m_text) {
  const Vec p = scenario_vector(ScenarioEntry{p_text, 0}, "--p");
  const ConvexPotential psi = named_potential(name, static_cast<int>(p.size()), parse_matrix_arg(m_text));
  const LegendreTransformResult r = legendre_transform(psi, p);
  char buf[64];
  print_vec(std::cout, "x_star", r.x_star);
  std::snprintf(buf, sizeof buf, "%.17g", r.phi_value);
  std::cout << "phi = " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.3e", r.residual);
  std::cout << "residual = " << buf << "\niterations = " << r.iterations << "\n";
  return exit_pass;
}

int run_divergence(const std::string& name, const std::string& grid, const std::string& m_text,
                   const std::string& out_dir) {
  const auto pts = grid_points(parse_grid(grid));
  const ConvexPotential psi = named_potential(name, static_cast<int>(pts.front().size()), parse_matrix_arg(m_text));
  const DuallyFlatWorkspace ws(psi);
  const DivergenceTable t = divergence_table(ws, pts);
  if (out_dir.empty()) {
    write_divergence_csv(std::cout, t);
  } else {
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / "divergence.csv";
    std::ofstream f(path);
    write_divergence_csv(f, t);
    std::cout << "wrote " << path.string() << "\n";
  }
  int failed = 0;
  for (const auto& c : t.cells) failed += c.error.empty() ? 0 : 1;
  if (failed) std::cerr << failed << " cells failed\n";
  return exit_pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contact Hamiltonian flows on dually flat spaces"};
  app.require_subcommand(1);
  std::string out_dir;
  std::optional<double> tol;
  app.add_option("--out", out_dir, "directory for artifacts")->capture_default_str();
  app.add_option("--tol", tol, "override every numeric check tolerance")->check(CLI::PositiveNumber);

  std::string scenario_path;
  auto* simulate = app.add_subcommand("simulate", "integrate a scenario, write its artifacts and report");
  simulate->add_option("scenario", scenario_path, "scenario file")->required();
  auto* check = app.add_subcommand("check", "integrate a scenario and run its checks without writing artifacts");
  check->add_option("scenario", scenario_path, "scenario file")->required();
  for (auto* sub : {simulate, check}) {
    sub->add_option("--out", out_dir, "directory for artifacts");
    sub->add_option("--tol", tol, "override every numeric check tolerance")->check(CLI::PositiveNumber);
  }

  std::string potential, p_text, m_text, grid;
  auto* leg = app.add_subcommand("legendre", "Legendre transform of a named potential at p");
  leg->add_option("--potential", potential, "quadratic, log_cosh or spin_product")->required();
  leg->add_option("--p", p_text, "comma separated dual coordinates")->required();
  leg->add_option("--M", m_text, "matrix for the quadratic potential, rows separated by ';'");

  auto* div = app.add_subcommand("divergence", "canonical divergence table over a product grid");
  div->add_option("--potential", potential, "quadratic, log_cosh or spin_product")->required();
  div->add_option("--grid", grid, "lo:hi:count per axis, comma separated")->required();
  div->add_option("--M", m_text, "matrix for the quadratic potential, rows separated by ';'");
  div->add_option("--out", out_dir, "directory for divergence.csv (stdout when absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_pass : exit_usage;
  }

  try {
    if (*simulate || *check) {
      RunOptions opts;
      opts.out_dir = out_dir.empty() ? std::filesystem::path(".") : std::filesystem::path(out_dir);
      opts.tol = tol;
      opts.write_artifacts = static_cast<bool>(*simulate);
      return run_scenario_file(scenario_path, opts, std::cout, std::cerr);
    }
    if (*leg) return run_legendre(potential, p_text, m_text);
    if (*div) return run_divergence(potential, grid, m_text, out_dir);
  } catch (const ParseError& e) {
    std::cerr << "error: " << (e.field.empty() ? "" : e.field + ": ") << e.what() << "\n";
    return exit_usage;
  } catch (const MalformedInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const ConvexityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return exit_numerical;
  }
  return exit_usage;
}
