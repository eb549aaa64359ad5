#include "contactflow/lifts.hpp"

#include <cmath>

namespace cflow {

DriftField make_drift(int n, std::function<Vec(const Vec&)> eval, std::function<Mat(const Vec&)> jacobian) {
  if (n < 1) throw MalformedInput("drift needs n >= 1");
  if (!eval) throw MalformedInput("drift needs an evaluation callable");
  DriftField F;
  F.n = n;
  F.eval = eval;
  if (!jacobian) {
    jacobian = [eval, n](const Vec& y) {
      Mat J(n, n);
      Vec w = y;
      for (int j = 0; j < n; ++j) {
        const double s = default_fd_step(y(j));
        w(j) = y(j) + s;
        const Vec fp = eval(w);
        w(j) = y(j) - s;
        const Vec fm = eval(w);
        w(j) = y(j);
        J.col(j) = (fp - fm) / (2.0 * s);
      }
      return J;
    };
  }
  F.jacobian = std::move(jacobian);
  return F;
}

DriftField linear_drift(const Mat& A, const Vec& b) {
  if (A.rows() != A.cols() || A.rows() != b.size()) throw MalformedInput("linear drift: shape mismatch");
  return make_drift(
      static_cast<int>(A.rows()), [A, b](const Vec& y) -> Vec { return A * y + b; },
      [A](const Vec&) -> Mat { return A; });
}

DriftField linear_drift(const Mat& A) { return linear_drift(A, Vec::Zero(A.rows())); }

bool drift_vanishes_on(const DriftField& F, const std::vector<Vec>& samples, double tol) {
  for (const auto& y : samples)
    if (F.eval(y).cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

RestoringFunction RestoringFunction::linear(double gamma0) {
  if (!std::isfinite(gamma0)) throw MalformedInput("gamma0 must be finite");
  RestoringFunction g;
  g.kind = Kind::linear;
  g.gamma0 = gamma0;
  g.eval = [gamma0](double d) { return gamma0 * d; };
  g.derivative = [gamma0](double) { return gamma0; };
  return g;
}

RestoringFunction RestoringFunction::custom(std::function<double(double)> eval,
                                            std::function<double(double)> derivative) {
  if (!eval) throw MalformedInput("restoring function needs an evaluation callable");
  if (eval(0.0) != 0.0) throw MalformedInput("restoring function must vanish at 0");
  for (double d : {-1.0, -1e-3, 1e-3, 1.0})
    if (eval(d) == 0.0) throw MalformedInput("restoring function must be nonzero away from 0");
  RestoringFunction g;
  g.kind = Kind::custom;
  g.gamma0 = 0.0;
  g.eval = eval;
  if (!derivative) {
    derivative = [eval](double d) {
      const double s = default_fd_step(d);
      return (eval(d + s) - eval(d - s)) / (2.0 * s);
    };
  }
  g.derivative = std::move(derivative);
  return g;
}

void LiftSpec::validate() const {
  if (potential.n < 1 || !potential.value || !potential.gradient || !potential.hessian)
    throw MalformedInput("lift spec: incomplete potential");
  if (drift.n != potential.n || !drift.eval || !drift.jacobian)
    throw MalformedInput("lift spec: drift dimension does not match the potential");
  if (!restoring.eval || !restoring.derivative) throw MalformedInput("lift spec: incomplete restoring function");
}

LiftSpec psi_lift(const DuallyFlatWorkspace& ws, DriftField drift, RestoringFunction restoring) {
  LiftSpec s{Side::psi, ws.psi(), std::move(drift), std::move(restoring)};
  s.validate();
  return s;
}

LiftSpec phi_lift(const DuallyFlatWorkspace& ws, DriftField drift, RestoringFunction restoring) {
  LiftSpec s{Side::phi, ws.phi(), std::move(drift), std::move(restoring)};
  s.validate();
  return s;
}

Deltas lift_deltas(const LiftSpec& spec, const CanonicalPoint& pt) {
  return spec.side == Side::psi ? delta_psi(spec.potential, pt) : delta_from_phi(spec.potential, pt);
}

CanonicalPoint lift_embed(const LiftSpec& spec, const Vec& y) {
  return spec.side == Side::psi ? embed_psi(spec.potential, y) : embed_from_phi(spec.potential, y);
}

ContactHamiltonian build_hamiltonian(const LiftSpec& spec) {
  spec.validate();
  const int n = spec.dim();
  const ConvexPotential pot = spec.potential;
  const DriftField F = spec.drift;
  const RestoringFunction G = spec.restoring;

  if (spec.side == Side::psi) {
    auto eval = [pot, F, G](const Vec& x, const Vec& p, double z) {
      return (pot.gradient(x) - p).dot(F.eval(x)) + G.eval(pot.value(x) - z);
    };
    auto gx = [pot, F, G](const Vec& x, const Vec& p, double z) -> Vec {
      const Vec grad = pot.gradient(x);
      const Vec delta = grad - p;
      const double gp = G.derivative(pot.value(x) - z);
      return pot.hessian(x) * F.eval(x) + F.jacobian(x).transpose() * delta + gp * grad;
    };
    auto gp = [F](const Vec& x, const Vec&, double) -> Vec { return -F.eval(x); };
    auto gz = [pot, G](const Vec& x, const Vec&, double z) { return -G.derivative(pot.value(x) - z); };
    return ContactHamiltonian::closed_form(n, eval, gx, gp, gz);
  }

  auto eval = [pot, F, G](const Vec& x, const Vec& p, double z) {
    return (x - pot.gradient(p)).dot(F.eval(p)) + G.eval(x.dot(p) - pot.value(p) - z);
  };
  auto gx = [pot, G, F](const Vec& x, const Vec& p, double z) -> Vec {
    const double gp = G.derivative(x.dot(p) - pot.value(p) - z);
    return F.eval(p) + gp * p;
  };
  auto gp = [pot, F, G](const Vec& x, const Vec& p, double z) -> Vec {
    const Vec delta = x - pot.gradient(p);
    const double g1 = G.derivative(x.dot(p) - pot.value(p) - z);
    const Vec f = F.eval(p);
    return -pot.hessian(p) * f + F.jacobian(p).transpose() * delta + g1 * delta;
  };
  auto gz = [pot, G](const Vec& x, const Vec& p, double z) {
    return -G.derivative(x.dot(p) - pot.value(p) - z);
  };
  return ContactHamiltonian::closed_form(n, eval, gx, gp, gz);
}

TangentVector restricted_field_psi(const LiftSpec& spec, const Vec& x) {
  if (spec.side != Side::psi) throw MalformedInput("restricted_field_psi needs a psi-side spec");
  const Vec f = spec.drift.eval(x);
  return {f, spec.potential.hessian(x) * f, spec.potential.gradient(x).dot(f)};
}

TangentVector restricted_field_phi(const LiftSpec& spec, const Vec& p) {
  if (spec.side != Side::phi) throw MalformedInput("restricted_field_phi needs a phi-side spec");
  const Vec f = spec.drift.eval(p);
  const Vec dx = spec.potential.hessian(p) * f;
  return {dx, f, p.dot(dx)};
}

TangentVector restricted_field(const LiftSpec& spec, const Vec& y) {
  return spec.side == Side::psi ? restricted_field_psi(spec, y) : restricted_field_phi(spec, y);
}

LiftedVelocity lifted_field(const LiftSpec& spec, const CanonicalPoint& pt) {
  LiftedVelocity out;
  out.v = hamiltonian_vector_field(build_hamiltonian(spec), pt);
  const Deltas d = lift_deltas(spec, pt);
  const Vec& chart = spec.side == Side::psi ? pt.x : pt.p;
  out.d_delta0 = -spec.restoring.eval(d.d0);
  out.d_delta = -spec.drift.jacobian(chart).transpose() * d.d - spec.restoring.derivative(d.d0) * d.d;
  return out;
}

namespace {

void require_dim(const DuallyFlatWorkspace& ws, const Vec& v, const char* what) {
  if (v.size() != ws.dim()) throw MalformedInput(std::string(what) + ": dimension mismatch");
}

}  // namespace

DriftField geodesic_drift_psi(const DuallyFlatWorkspace& ws, const Vec& p_from, const Vec& p_to) {
  require_dim(ws, p_from, "geodesic_drift_psi");
  require_dim(ws, p_to, "geodesic_drift_psi");
  const ConvexPotential psi = ws.psi();
  const Vec dp = p_to - p_from;
  return make_drift(ws.dim(), [psi, dp](const Vec& x) -> Vec {
    const Mat H = metric(psi, x);
    return H.llt().solve(dp);
  });
}

DriftField geodesic_drift_phi(const DuallyFlatWorkspace& ws, const Vec& x_from, const Vec& x_to) {
  require_dim(ws, x_from, "geodesic_drift_phi");
  require_dim(ws, x_to, "geodesic_drift_phi");
  const DuallyFlatWorkspace w = ws;
  const Vec dx = x_to - x_from;
  return make_drift(ws.dim(), [w, dx](const Vec& p) -> Vec {
    return metric(w.psi(), w.x_of(p)) * dx;
  });
}

DriftField gradient_drift_psi(const DuallyFlatWorkspace& ws, const Vec& target_x) {
  require_dim(ws, target_x, "gradient_drift_psi");
  const ConvexPotential psi = ws.psi();
  const Vec pt = psi.gradient(target_x);
  // grad_x D(xi || xi') = grad psi(x) - p'.
  return make_drift(ws.dim(), [psi, pt](const Vec& x) -> Vec {
    const Mat H = metric(psi, x);
    return -H.llt().solve(Vec(psi.gradient(x) - pt));
  });
}

DriftField gradient_drift_phi(const DuallyFlatWorkspace& ws, const Vec& target_p) {
  require_dim(ws, target_p, "gradient_drift_phi");
  const DuallyFlatWorkspace w = ws;
  const Vec xt = ws.x_of(target_p);
  // grad_p D(xi' || xi) = x(p) - x'.
  return make_drift(ws.dim(), [w, xt](const Vec& p) -> Vec {
    const Vec x = w.x_of(p);
    return -(metric(w.psi(), x) * (x - xt));
  });
}

double invariant_density(const LiftSpec& spec, const CanonicalPoint& pt, double Z) {
  if (spec.restoring.kind != RestoringFunction::Kind::linear || spec.restoring.gamma0 == 0.0)
    throw MalformedInput("invariant density needs a linear restoring function with gamma0 != 0");
  if (!(Z > 0.0)) throw MalformedInput("invariant density needs Z > 0");
  const double h = build_hamiltonian(spec)(pt);
  if (!(h > 0.0)) throw OutsideInvariantChart("invariant density needs h > 0, got h = " + std::to_string(h));
  return std::pow(h, -(spec.dim() + 1)) / Z;
}

}  // namespace cflow
