#include "contactflow/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace cflow {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& what) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw MalformedInput(what + ": cannot parse '" + s + "' as a number");
  return v;
}

}  // namespace

LineFit fit_line(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size()) throw MalformedInput("fit_line: size mismatch");
  if (t.size() < 2) throw MalformedInput("fit_line: need at least two samples");
  const double m = static_cast<double>(t.size());
  double st = 0.0, sy = 0.0;
  for (size_t k = 0; k < t.size(); ++k) {
    st += t[k];
    sy += y[k];
  }
  const double tm = st / m, ym = sy / m;
  double stt = 0.0, sty = 0.0;
  for (size_t k = 0; k < t.size(); ++k) {
    stt += (t[k] - tm) * (t[k] - tm);
    sty += (t[k] - tm) * (y[k] - ym);
  }
  if (!(stt > 0.0)) throw MalformedInput("fit_line: degenerate time samples");
  LineFit f;
  f.slope = sty / stt;
  f.intercept = ym - f.slope * tm;
  f.samples = static_cast<int>(t.size());
  for (size_t k = 0; k < t.size(); ++k)
    f.max_residual = std::max(f.max_residual, std::abs(y[k] - (f.slope * t[k] + f.intercept)));
  return f;
}

LineFit fit_log_rate(const std::vector<double>& t, const std::vector<double>& q) {
  if (t.size() != q.size()) throw MalformedInput("fit_log_rate: size mismatch");
  std::vector<double> ts, ls;
  for (size_t k = t.size() / 2; k < t.size(); ++k) {
    if (q[k] == 0.0 || !std::isfinite(q[k])) continue;
    ts.push_back(t[k]);
    ls.push_back(std::log(std::abs(q[k])));
  }
  if (ts.size() < 2) throw MalformedInput("fit_log_rate: fewer than two nonzero samples in the second half");
  return fit_line(ts, ls);
}

void InvariantReport::add(std::string name, std::string expected, double expected_value, double fitted,
                          double residual, double tol) {
  for (const auto& c : checks)
    if (c.name == name) throw MalformedInput("duplicate check name: " + name);
  CheckResult c;
  c.name = std::move(name);
  c.expected = std::move(expected);
  c.expected_value = expected_value;
  c.fitted = fitted;
  c.residual = residual;
  c.tol = tol;
  c.pass = std::isfinite(residual) && residual <= tol;
  checks.push_back(std::move(c));
}

void InvariantReport::add_condition(std::string name, std::string expected, double value, bool holds) {
  add(std::move(name), std::move(expected), 0.0, value, 0.0, 0.0);
  checks.back().pass = holds;
  checks.back().condition = true;
}

bool InvariantReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

void write_report(std::ostream& os, const InvariantReport& report) {
  for (const auto& c : report.checks) {
    os << (c.pass ? "PASS " : "FAIL ") << c.name << "\n" << "  law:       " << c.expected << "\n";
    if (c.condition) {
      os << "  measured:  " << fmt6(c.fitted) << "\n";
      continue;
    }
    os << "  expected:  " << fmt6(c.expected_value) << "\n"
       << "  fitted:    " << fmt6(c.fitted) << "\n"
       << "  residual:  " << fmt6(c.residual) << "  (tol " << fmt6(c.tol) << ")\n";
  }
  int failed = 0;
  for (const auto& c : report.checks) failed += c.pass ? 0 : 1;
  os << report.checks.size() << " checks, " << failed << " failed\n";
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const std::vector<std::string>& state_names) {
  os << "t";
  for (const auto& s : state_names) os << "," << s;
  for (const auto& s : tr.diagnostic_names) os << "," << s;
  os << "\n";
  for (size_t k = 0; k < tr.times.size(); ++k) {
    os << fmt17(tr.times[k]);
    const Vec& y = tr.states[k];
    if (static_cast<size_t>(y.size()) != state_names.size())
      throw MalformedInput("write_trajectory_csv: state names do not match the state dimension");
    for (Eigen::Index i = 0; i < y.size(); ++i) os << "," << fmt17(y(i));
    if (k < tr.diagnostics.size())
      for (double v : tr.diagnostics[k]) os << "," << fmt17(v);
    os << "\n";
  }
}

DivergenceTable divergence_table(const DuallyFlatWorkspace& ws, const std::vector<Vec>& points) {
  DivergenceTable t;
  t.points = points;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (size_t i = 0; i < points.size(); ++i) {
    for (size_t j = 0; j < points.size(); ++j) {
      DivergenceCell c;
      c.i = static_cast<int>(i);
      c.j = static_cast<int>(j);
      try {
        c.d_ij = canonical_divergence(ws, points[i], points[j]);
        c.d_ji = canonical_divergence(ws, points[j], points[i]);
        c.asymmetry = c.d_ij - c.d_ji;
      } catch (const Error& e) {
        c.d_ij = c.d_ji = c.asymmetry = nan;
        c.error = e.what();
      }
      t.cells.push_back(std::move(c));
    }
  }
  return t;
}

void write_divergence_csv(std::ostream& os, const DivergenceTable& table) {
  const int n = table.points.empty() ? 0 : static_cast<int>(table.points.front().size());
  os << "i,j";
  for (int a = 0; a < n; ++a) os << ",xi_" << a;
  for (int a = 0; a < n; ++a) os << ",xj_" << a;
  os << ",D_ij,D_ji,asymmetry,error\n";
  for (const auto& c : table.cells) {
    os << c.i << "," << c.j;
    for (int a = 0; a < n; ++a) os << "," << fmt17(table.points[c.i](a));
    for (int a = 0; a < n; ++a) os << "," << fmt17(table.points[c.j](a));
    os << "," << fmt17(c.d_ij) << "," << fmt17(c.d_ji) << "," << fmt17(c.asymmetry) << ",";
    std::string msg = c.error;
    for (char& ch : msg)
      if (ch == '"') ch = '\'';
    if (!msg.empty()) os << '"' << msg << '"';
    os << "\n";
  }
}

std::vector<GridAxis> parse_grid(const std::string& spec) {
  std::vector<GridAxis> axes;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::vector<std::string> f;
    std::stringstream is(item);
    std::string part;
    while (std::getline(is, part, ':')) f.push_back(part);
    if (f.size() != 3) throw MalformedInput("grid axis '" + item + "' is not lo:hi:count");
    GridAxis a;
    a.lo = parse_double(f[0], "grid lo");
    a.hi = parse_double(f[1], "grid hi");
    const double c = parse_double(f[2], "grid count");
    if (c < 1 || c != std::floor(c) || c > 1e4) throw MalformedInput("grid count must be a positive integer");
    a.count = static_cast<int>(c);
    if (a.count > 1 && !(a.hi > a.lo)) throw MalformedInput("grid axis needs hi > lo");
    axes.push_back(a);
  }
  if (axes.empty()) throw MalformedInput("empty grid");
  return axes;
}

std::vector<Vec> grid_points(const std::vector<GridAxis>& axes) {
  const int n = static_cast<int>(axes.size());
  std::vector<Vec> pts;
  std::vector<int> idx(n, 0);
  while (true) {
    Vec x(n);
    for (int a = 0; a < n; ++a) {
      const auto& ax = axes[a];
      x(a) = ax.count == 1 ? ax.lo : ax.lo + (ax.hi - ax.lo) * idx[a] / (ax.count - 1);
    }
    pts.push_back(std::move(x));
    int a = n - 1;
    while (a >= 0 && ++idx[a] == axes[a].count) idx[a--] = 0;
    if (a < 0) break;
  }
  return pts;
}

}  // namespace cflow
