#include "contactflow/convex.hpp"

#include <cmath>

namespace cflow {

bool Box::contains(const Vec& x) const {
  return x.size() == lo.size() && (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

ScalarField make_scalar_field(int n, std::function<double(const Vec&)> value,
                              std::function<Vec(const Vec&)> gradient,
                              std::function<Mat(const Vec&)> hessian, std::string name) {
  if (n < 1) throw MalformedInput("scalar field needs n >= 1");
  if (!value) throw MalformedInput("scalar field needs a value callable");
  ScalarField f;
  f.n = n;
  f.name = std::move(name);
  f.value = value;
  const bool analytic_gradient = static_cast<bool>(gradient);
  if (!gradient) {
    gradient = [value, n](const Vec& x) {
      Vec g(n);
      Vec y = x;
      for (int a = 0; a < n; ++a) {
        const double s = default_fd_step(x(a));
        y(a) = x(a) + s;
        const double fp = value(y);
        y(a) = x(a) - s;
        const double fm = value(y);
        y(a) = x(a);
        g(a) = (fp - fm) / (2.0 * s);
      }
      return g;
    };
  }
  f.gradient = gradient;
  if (!hessian) {
    hessian = [gradient, n, analytic_gradient](const Vec& x) {
      Mat H(n, n);
      Vec y = x;
      for (int b = 0; b < n; ++b) {
        const double s = analytic_gradient ? default_fd_step(x(b)) : 1e-4 * std::max(1.0, std::abs(x(b)));
        y(b) = x(b) + s;
        const Vec gp = gradient(y);
        y(b) = x(b) - s;
        const Vec gm = gradient(y);
        y(b) = x(b);
        H.col(b) = (gp - gm) / (2.0 * s);
      }
      return Mat(0.5 * (H + H.transpose()));
    };
  }
  f.hessian = std::move(hessian);
  return f;
}

ConvexPotential make_potential(int n, std::function<double(const Vec&)> value,
                               std::function<Vec(const Vec&)> gradient,
                               std::function<Mat(const Vec&)> hessian, std::string name,
                               std::optional<Box> domain) {
  ConvexPotential psi;
  static_cast<ScalarField&>(psi) =
      make_scalar_field(n, std::move(value), std::move(gradient), std::move(hessian), std::move(name));
  if (domain) {
    if (domain->lo.size() != n || domain->hi.size() != n || !(domain->lo.array() < domain->hi.array()).all())
      throw MalformedInput("domain box is malformed");
  }
  psi.domain = std::move(domain);
  return psi;
}

void require_spd(const Mat& H, const char* context) {
  if (H.rows() != H.cols() || !H.allFinite())
    throw ConvexityError(std::string(context) + ": Hessian is not a finite square matrix");
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw ConvexityError(std::string(context) + ": Hessian is not symmetric");
  Eigen::LLT<Mat> llt(H);
  if (llt.info() != Eigen::Success)
    throw ConvexityError(std::string(context) + ": Hessian is not positive definite");
}

namespace potentials {

ConvexPotential quadratic(const Mat& M) {
  const int n = static_cast<int>(M.rows());
  if (n < 1) throw MalformedInput("quadratic potential needs n >= 1");
  require_spd(M, "quadratic potential");
  return make_potential(
      n, [M](const Vec& x) { return 0.5 * x.dot(M * x); }, [M](const Vec& x) -> Vec { return M * x; },
      [M](const Vec&) -> Mat { return M; }, "quadratic");
}

namespace {

// ln cosh x + ln 2 without overflow.
double log_cosh_plus_ln2(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a));
}

double sech2(double x) {
  const double e = std::exp(-2.0 * std::abs(x));
  return 4.0 * e / ((1.0 + e) * (1.0 + e));
}

}  // namespace

ConvexPotential log_cosh() {
  return make_potential(
      1, [](const Vec& x) { return log_cosh_plus_ln2(x(0)); },
      [](const Vec& x) -> Vec { return Vec::Constant(1, std::tanh(x(0))); },
      [](const Vec& x) -> Mat { return Mat::Constant(1, 1, sech2(x(0))); }, "log_cosh");
}

ConvexPotential separable(const std::vector<ConvexPotential>& parts) {
  if (parts.empty()) throw MalformedInput("separable potential needs at least one part");
  for (const auto& q : parts)
    if (q.n != 1) throw MalformedInput("separable parts must be one-dimensional");
  const int n = static_cast<int>(parts.size());
  std::string name = "separable";
  return make_potential(
      n,
      [parts](const Vec& x) {
        double s = 0.0;
        for (size_t i = 0; i < parts.size(); ++i) s += parts[i].value(x.segment(i, 1));
        return s;
      },
      [parts, n](const Vec& x) -> Vec {
        Vec g(n);
        for (int i = 0; i < n; ++i) g(i) = parts[i].gradient(x.segment(i, 1))(0);
        return g;
      },
      [parts, n](const Vec& x) -> Mat {
        Mat H = Mat::Zero(n, n);
        for (int i = 0; i < n; ++i) H(i, i) = parts[i].hessian(x.segment(i, 1))(0, 0);
        return H;
      },
      name);
}

ConvexPotential spin_product(int n) {
  if (n < 1) throw MalformedInput("spin product needs n >= 1");
  auto p = separable(std::vector<ConvexPotential>(n, log_cosh()));
  p.name = "spin_product";
  return p;
}

}  // namespace potentials

}  // namespace cflow
