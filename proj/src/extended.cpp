#include "contactflow/extended.hpp"

#include <cmath>

namespace cflow {

double max_abs_diff(const ExtendedTangent& a, const ExtendedTangent& b) {
  if (a.dx.size() != b.dx.size()) throw MalformedInput("extended tangent dimension mismatch");
  double m = std::max({std::abs(a.dx_extra - b.dx_extra), std::abs(a.dp_extra - b.dp_extra), std::abs(a.dz - b.dz)});
  m = std::max(m, (a.dx - b.dx).cwiseAbs().maxCoeff());
  m = std::max(m, (a.dp - b.dp).cwiseAbs().maxCoeff());
  return m;
}

void ExtendedLiftSpec::validate() const {
  base.validate();
  if (!(anchor != 0.0) || !std::isfinite(anchor)) throw MalformedInput("extended lift anchor must be finite and nonzero");
}

CanonicalPoint flatten_extended(const ExtendedPoint& pt) {
  const int n = pt.dim();
  if (pt.p.size() != n) throw MalformedInput("extended point: x and p lengths differ");
  CanonicalPoint q;
  q.x.resize(n + 1);
  q.p.resize(n + 1);
  q.x << pt.x, pt.x_extra;
  q.p << pt.p, pt.p_extra;
  q.z = pt.z;
  return q;
}

ExtendedPoint unflatten_extended(const CanonicalPoint& q) {
  const int n = q.dim() - 1;
  return {q.x.head(n), q.x(n), q.p.head(n), q.p(n), q.z};
}

ExtendedTangent unflatten_extended(const TangentVector& v) {
  const int n = v.dim() - 1;
  return {v.dx.head(n), v.dx(n), v.dp.head(n), v.dp(n), v.dz};
}

Vec flatten_state(const ExtendedPoint& pt) { return flatten(flatten_extended(pt)); }

ExtendedPoint unflatten_state(const Vec& y, int n) { return unflatten_extended(unflatten_point(y, n + 1)); }

Vec flatten_state(const ExtendedTangent& v) {
  const int n = static_cast<int>(v.dx.size());
  Vec y(2 * n + 3);
  y << v.dx, v.dx_extra, v.dp, v.dp_extra, v.dz;
  return y;
}

double generating_value(const ExtendedLiftSpec& spec, const ExtendedPoint& pt) {
  const auto& pot = spec.base.potential;
  if (spec.base.side == Side::psi) return pot.value(pt.x) + spec.anchor * pt.x_extra;
  return pot.value(pt.p) + spec.anchor * pt.p_extra;
}

Deltas tilde_deltas(const ExtendedLiftSpec& spec, const ExtendedPoint& pt) {
  const auto& pot = spec.base.potential;
  if (pt.dim() != spec.dim() || pt.p.size() != spec.dim()) throw MalformedInput("tilde_deltas: dimension mismatch");
  const double a = spec.anchor;
  if (spec.base.side == Side::psi) {
    return {pot.value(pt.x) + a * pt.x_extra - pt.z, (pt.p_extra / a) * pot.gradient(pt.x) - pt.p};
  }
  return {pt.x.dot(pt.p) + (pt.x_extra - a) * pt.p_extra - pot.value(pt.p) - pt.z,
          pt.x - (pt.x_extra / a) * pot.gradient(pt.p)};
}

ExtendedPoint embed_extended(const ExtendedLiftSpec& spec, const Vec& chart, double extra) {
  const auto& pot = spec.base.potential;
  const double a = spec.anchor;
  if (chart.size() != spec.dim()) throw MalformedInput("embed_extended: dimension mismatch");
  if (spec.base.side == Side::psi) return {chart, extra, pot.gradient(chart), a, pot.value(chart) + a * extra};
  const Vec x = pot.gradient(chart);
  return {x, a, chart, extra, x.dot(chart) - pot.value(chart)};
}

ContactHamiltonian extended_hamiltonian(const ExtendedLiftSpec& spec) {
  spec.validate();
  const int n = spec.dim();
  const ConvexPotential pot = spec.base.potential;
  const DriftField F = spec.base.drift;
  const RestoringFunction G = spec.base.restoring;
  const double a = spec.anchor;

  if (spec.base.side == Side::psi) {
    auto d0 = [pot, a, n](const Vec& X, double z) { return pot.value(X.head(n)) + a * X(n) - z; };
    auto eval = [=](const Vec& X, const Vec& P, double z) {
      const Vec x = X.head(n);
      const Vec delta = (P(n) / a) * pot.gradient(x) - P.head(n);
      return delta.dot(F.eval(x)) + G.eval(d0(X, z));
    };
    auto gx = [=](const Vec& X, const Vec& P, double z) -> Vec {
      const Vec x = X.head(n);
      const Vec grad = pot.gradient(x);
      const Vec delta = (P(n) / a) * grad - P.head(n);
      const double g1 = G.derivative(d0(X, z));
      Vec out(n + 1);
      out << (P(n) / a) * pot.hessian(x) * F.eval(x) + F.jacobian(x).transpose() * delta + g1 * grad, g1 * a;
      return out;
    };
    auto gp = [=](const Vec& X, const Vec&, double) -> Vec {
      const Vec x = X.head(n);
      const Vec f = F.eval(x);
      Vec out(n + 1);
      out << -f, pot.gradient(x).dot(f) / a;
      return out;
    };
    auto gz = [=](const Vec& X, const Vec&, double z) { return -G.derivative(d0(X, z)); };
    return ContactHamiltonian::closed_form(n + 1, eval, gx, gp, gz);
  }

  auto d0 = [pot, a, n](const Vec& X, const Vec& P, double z) {
    return X.head(n).dot(P.head(n)) + (X(n) - a) * P(n) - pot.value(P.head(n)) - z;
  };
  auto eval = [=](const Vec& X, const Vec& P, double z) {
    const Vec p = P.head(n);
    const Vec delta = X.head(n) - (X(n) / a) * pot.gradient(p);
    return delta.dot(F.eval(p)) + G.eval(d0(X, P, z));
  };
  auto gx = [=](const Vec& X, const Vec& P, double z) -> Vec {
    const Vec p = P.head(n);
    const Vec f = F.eval(p);
    const double g1 = G.derivative(d0(X, P, z));
    Vec out(n + 1);
    out << f + g1 * p, -pot.gradient(p).dot(f) / a + g1 * P(n);
    return out;
  };
  auto gp = [=](const Vec& X, const Vec& P, double z) -> Vec {
    const Vec p = P.head(n);
    const Vec x = X.head(n);
    const Vec grad = pot.gradient(p);
    const Vec delta = x - (X(n) / a) * grad;
    const Vec f = F.eval(p);
    const double g1 = G.derivative(d0(X, P, z));
    Vec out(n + 1);
    out << -(X(n) / a) * pot.hessian(p) * f + F.jacobian(p).transpose() * delta + g1 * (x - grad), g1 * (X(n) - a);
    return out;
  };
  auto gz = [=](const Vec& X, const Vec& P, double z) { return -G.derivative(d0(X, P, z)); };
  return ContactHamiltonian::closed_form(n + 1, eval, gx, gp, gz);
}

ExtendedTangent extended_lifted_field(const ExtendedLiftSpec& spec, const ExtendedPoint& pt) {
  return unflatten_extended(hamiltonian_vector_field(extended_hamiltonian(spec), flatten_extended(pt)));
}

ExtendedTangent extended_lifted_field_termwise(const ExtendedLiftSpec& spec, const ExtendedPoint& pt) {
  spec.validate();
  const auto& pot = spec.base.potential;
  const auto& F = spec.base.drift;
  const auto& G = spec.base.restoring;
  const double a = spec.anchor;
  const Deltas td = tilde_deltas(spec, pt);
  const double gam = G.eval(td.d0);
  const double g1 = G.derivative(td.d0);
  ExtendedTangent v;
  if (spec.base.side == Side::psi) {
    const Vec f = F.eval(pt.x);
    const Vec grad = pot.gradient(pt.x);
    const Mat J = F.jacobian(pt.x);
    v.dx = f;
    v.dx_extra = -grad.dot(f) / a;
    v.dp_extra = g1 * (a - pt.p_extra);
    v.dz = gam;
    v.dp = (pt.p_extra / a) * (pot.hessian(pt.x) * f + J.transpose() * grad) - J.transpose() * pt.p + g1 * (grad - pt.p);
    return v;
  }
  const Vec f = F.eval(pt.p);
  const Vec grad = pot.gradient(pt.p);
  const Mat Hf = pot.hessian(pt.p);
  const Mat J = F.jacobian(pt.p);
  v.dx = (pt.x_extra / a) * Hf * f - J.transpose() * td.d + g1 * (grad - pt.x);
  v.dx_extra = g1 * (a - pt.x_extra);
  v.dp = f;
  v.dp_extra = -grad.dot(f) / a;
  v.dz = td.d.dot(f) + gam + (pt.x_extra / a) * pt.p.dot(Hf * f) - pt.p.dot(J.transpose() * td.d) -
         (pt.x.dot(pt.p) + (pt.x_extra - a) * pt.p_extra - pt.p.dot(grad)) * g1;
  return v;
}

TildeDeltaVelocity tilde_delta_velocities(const ExtendedLiftSpec& spec, const ExtendedPoint& pt) {
  const Deltas td = tilde_deltas(spec, pt);
  const Vec& chart = spec.base.side == Side::psi ? pt.x : pt.p;
  const auto& G = spec.base.restoring;
  return {-G.eval(td.d0), -spec.base.drift.jacobian(chart).transpose() * td.d - G.derivative(td.d0) * td.d};
}

ExtendedTangent restricted_extended_field(const ExtendedLiftSpec& spec, const Vec& chart) {
  spec.validate();
  const auto& pot = spec.base.potential;
  const Vec f = spec.base.drift.eval(chart);
  const double a = spec.anchor;
  ExtendedTangent v;
  if (spec.base.side == Side::psi) {
    v.dx = f;
    v.dx_extra = -pot.gradient(chart).dot(f) / a;
    v.dp = pot.hessian(chart) * f;
    v.dp_extra = 0.0;
    v.dz = 0.0;
    return v;
  }
  // On the phi side the canonical field keeps z = x.p - phi(p) on the
  // submanifold, so z moves at the rate p.Hess(phi).F.
  v.dp = f;
  v.dp_extra = -pot.gradient(chart).dot(f) / a;
  v.dx = pot.hessian(chart) * f;
  v.dx_extra = 0.0;
  v.dz = chart.dot(v.dx);
  return v;
}

double extended_invariant_density(const ExtendedLiftSpec& spec, const ExtendedPoint& pt, double Z) {
  const auto& G = spec.base.restoring;
  if (G.kind != RestoringFunction::Kind::linear || G.gamma0 == 0.0)
    throw MalformedInput("extended invariant density needs a linear restoring function with gamma0 != 0");
  if (!(Z > 0.0)) throw MalformedInput("extended invariant density needs Z > 0");
  const double h = extended_hamiltonian(spec)(flatten_extended(pt));
  if (!(h > 0.0)) throw OutsideInvariantChart("extended invariant density needs h > 0, got h = " + std::to_string(h));
  return std::pow(h, -(spec.dim() + 2)) / Z;
}

ConvexPotential extended_potential(const ExtendedLiftSpec& spec) {
  const ConvexPotential pot = spec.base.potential;
  const double a = spec.anchor;
  const int n = pot.n;
  ConvexPotential q;
  q.n = n + 1;
  q.name = spec.base.side == Side::psi ? "psi_tilde" : "phi_tilde";
  q.value = [pot, a, n](const Vec& y) { return pot.value(y.head(n)) + a * y(n); };
  q.gradient = [pot, a, n](const Vec& y) -> Vec {
    Vec g(n + 1);
    g << pot.gradient(y.head(n)), a;
    return g;
  };
  q.hessian = [pot, n](const Vec& y) -> Mat {
    Mat H = Mat::Zero(n + 1, n + 1);
    H.topLeftCorner(n, n) = pot.hessian(y.head(n));
    return H;
  };
  return q;
}

DuallyFlatWorkspace extended_workspace(const ExtendedLiftSpec& spec) {
  const ConvexPotential q = extended_potential(spec);
  std::string detail = "Hessian is singular";
  try {
    DuallyFlatWorkspace probe(q);
  } catch (const ConvexityError& e) {
    detail = e.what();
  }
  throw NotDuallyFlat("the extended generating function is affine in the extra coordinate and induces no metric (" +
                      detail + ")");
}

}  // namespace cflow
