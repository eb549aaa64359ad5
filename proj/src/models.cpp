#include "contactflow/models.hpp"

#include <cmath>

namespace cflow {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw MalformedInput(std::string(name) + " must be positive");
}

Mat diag(double a) { return Mat::Constant(1, 1, a); }

Mat diag(double a, double b) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

ConvexPotential pick(const CircuitParams& p, const ConvexPotential& fallback) {
  if (p.potential) {
    if (p.potential->n != fallback.n) throw MalformedInput("circuit potential has the wrong dimension");
    return *p.potential;
  }
  return fallback;
}

ExtendedLiftSpec thermal(LiftSpec base, double T0) {
  require_positive(T0, "T0");
  ExtendedLiftSpec s{std::move(base), T0};
  s.validate();
  return s;
}

}  // namespace

LiftSpec rc_spec(const CircuitParams& p) {
  require_positive(p.R, "R");
  require_positive(p.C, "C");
  const double k = 1.0 / (p.R * p.C);
  LiftSpec s{Side::psi, pick(p, potentials::quadratic(diag(1.0 / p.C))), linear_drift(diag(-k)),
             RestoringFunction::linear(p.gamma0)};
  s.validate();
  return s;
}

ExtendedLiftSpec rc_thermal_spec(const CircuitParams& p) { return thermal(rc_spec(p), p.T0); }

LiftSpec rl_spec(const CircuitParams& p) {
  require_positive(p.R, "R");
  require_positive(p.L, "L");
  LiftSpec s{Side::phi, pick(p, potentials::quadratic(diag(p.L))), linear_drift(diag(-p.R / p.L)),
             RestoringFunction::linear(p.gamma0)};
  s.validate();
  return s;
}

ExtendedLiftSpec rl_thermal_spec(const CircuitParams& p) {
  require_positive(p.R, "R");
  require_positive(p.L, "L");
  LiftSpec s{Side::psi, pick(p, potentials::quadratic(diag(1.0 / p.L))), linear_drift(diag(-p.R / p.L)),
             RestoringFunction::linear(p.gamma0)};
  return thermal(std::move(s), p.T0);
}

LiftSpec rlc_spec(const CircuitParams& p) {
  // R = 0 is admitted here: it is the lossless oscillator limit.
  if (!(p.R >= 0.0) || !std::isfinite(p.R)) throw MalformedInput("R must be non-negative");
  require_positive(p.L, "L");
  require_positive(p.C, "C");
  Mat A(2, 2);
  A << 0.0, 1.0 / p.C, -1.0 / p.L, -p.R / p.L;
  LiftSpec s{Side::phi, pick(p, potentials::quadratic(diag(p.C, p.L))), linear_drift(A),
             RestoringFunction::linear(p.gamma0)};
  s.validate();
  return s;
}

ExtendedLiftSpec rlc_thermal_spec(const CircuitParams& p) {
  if (!(p.R >= 0.0) || !std::isfinite(p.R)) throw MalformedInput("R must be non-negative");
  require_positive(p.L, "L");
  require_positive(p.C, "C");
  Mat A(2, 2);
  A << 0.0, 1.0 / p.L, -1.0 / p.C, -p.R / p.L;
  LiftSpec s{Side::psi, pick(p, potentials::quadratic(diag(1.0 / p.C, 1.0 / p.L))), linear_drift(A),
             RestoringFunction::linear(p.gamma0)};
  return thermal(std::move(s), p.T0);
}

LiftSpec spin_spec(const SpinParams& p) {
  if (!std::isfinite(p.theta) || !std::isfinite(p.lambda0)) throw MalformedInput("spin parameters must be finite");
  if (p.lambda0 < 0.0) throw MalformedInput("lambda0 must be non-negative");
  Vec b = Vec::Constant(1, p.lambda0 * p.theta);
  LiftSpec s{Side::psi, potentials::log_cosh(), linear_drift(diag(-p.lambda0), b),
             RestoringFunction::linear(p.gamma0)};
  s.validate();
  return s;
}

OnsagerParams make_onsager(const Mat& L, std::optional<ScalarField> U, double gamma0) {
  require_spd(L, "Onsager coefficients");
  OnsagerParams o;
  o.L = L;
  o.M = L.llt().solve(Mat::Identity(L.rows(), L.cols()));
  if (U && U->n != L.rows()) throw MalformedInput("Onsager potential has the wrong dimension");
  o.U = std::move(U);
  o.gamma0 = gamma0;
  return o;
}

LiftSpec onsager_spec(const OnsagerParams& o) {
  require_spd(o.L, "Onsager coefficients");
  if ((o.M * o.L - Mat::Identity(o.L.rows(), o.L.cols())).cwiseAbs().maxCoeff() > 1e-9)
    throw MalformedInput("Onsager M is not the inverse of L");
  const ConvexPotential psi = potentials::quadratic(o.M);
  const int n = static_cast<int>(o.L.rows());
  DriftField F;
  if (o.U) {
    const ScalarField U = *o.U;
    const Mat L = o.L;
    F = make_drift(n, [U, L](const Vec& x) -> Vec { return -L * U.gradient(x); },
                   [U, L](const Vec& x) -> Mat { return -L * U.hessian(x); });
  } else {
    // -L M x = -x.
    F = linear_drift(-Mat(o.L * o.M));
  }
  LiftSpec s{Side::psi, psi, std::move(F), RestoringFunction::linear(o.gamma0)};
  s.validate();
  return s;
}

StabilityQuery onsager_query(const OnsagerParams& o, std::vector<Vec> samples) {
  StabilityQuery q;
  ScalarField U = o.U ? *o.U : static_cast<ScalarField>(potentials::quadratic(o.M));
  q.claim = OnsagerGradientClass{o.L, U};
  q.samples = std::move(samples);
  return q;
}

LiftSpec oscillatory_spec(const ConvexPotential& psi, double omega, double gamma0) {
  if (psi.n != 2) throw MalformedInput("oscillatory drift needs n = 2");
  Mat A(2, 2);
  A << 0.0, omega, -omega, 0.0;
  LiftSpec s{Side::psi, psi, linear_drift(A), RestoringFunction::linear(gamma0)};
  s.validate();
  return s;
}

}  // namespace cflow
