#pragma once

#include "contactflow/lifts.hpp"

namespace cflow {

// Coordinates on the (2n+3)-dimensional manifold with contact form
// dz - p.dx - p_extra dx_extra.
struct ExtendedPoint {
  Vec x;
  double x_extra = 0.0;
  Vec p;
  double p_extra = 0.0;
  double z = 0.0;

  int dim() const { return static_cast<int>(x.size()); }
};

struct ExtendedTangent {
  Vec dx;
  double dx_extra = 0.0;
  Vec dp;
  double dp_extra = 0.0;
  double dz = 0.0;
};

double max_abs_diff(const ExtendedTangent& a, const ExtendedTangent& b);

// psi side: psi~ = psi(x) + anchor * x_extra.
// phi side: phi~ = phi(p) + anchor * p_extra.
struct ExtendedLiftSpec {
  LiftSpec base;
  double anchor = 1.0;

  int dim() const { return base.dim(); }
  void validate() const;
};

// Flattening to an (n+1)-dimensional canonical point: x_extra and p_extra
// become the last slots of x and p.
CanonicalPoint flatten_extended(const ExtendedPoint& pt);
ExtendedPoint unflatten_extended(const CanonicalPoint& pt);
ExtendedTangent unflatten_extended(const TangentVector& v);
Vec flatten_state(const ExtendedPoint& pt);
ExtendedPoint unflatten_state(const Vec& y, int n);
Vec flatten_state(const ExtendedTangent& v);

// psi~ or phi~ at the point.
double generating_value(const ExtendedLiftSpec& spec, const ExtendedPoint& pt);

Deltas tilde_deltas(const ExtendedLiftSpec& spec, const ExtendedPoint& pt);

// Embedding of the (n+1)-dimensional Legendre submanifold. On the psi side the
// free coordinates are (x, x_extra); on the phi side (p, p_extra).
ExtendedPoint embed_extended(const ExtendedLiftSpec& spec, const Vec& chart, double extra);

// h~ = Delta~.F + Gamma(Delta~_0) as an (n+1)-dimensional contact Hamiltonian.
ContactHamiltonian extended_hamiltonian(const ExtendedLiftSpec& spec);

// Canonical field of h~.
ExtendedTangent extended_lifted_field(const ExtendedLiftSpec& spec, const ExtendedPoint& pt);
// The same field from the component formulas written out term by term.
ExtendedTangent extended_lifted_field_termwise(const ExtendedLiftSpec& spec, const ExtendedPoint& pt);

struct TildeDeltaVelocity {
  double d_delta0 = 0.0;
  Vec d_delta;
};
TildeDeltaVelocity tilde_delta_velocities(const ExtendedLiftSpec& spec, const ExtendedPoint& pt);

// Field on the submanifold; chart is x (psi side) or p (phi side).
ExtendedTangent restricted_extended_field(const ExtendedLiftSpec& spec, const Vec& chart);

// h~^{-(n+2)} / Z.
double extended_invariant_density(const ExtendedLiftSpec& spec, const ExtendedPoint& pt, double Z = 1.0);

// psi~ as a potential on (x, x_extra). Its Hessian is singular.
ConvexPotential extended_potential(const ExtendedLiftSpec& spec);

// Always throws NotDuallyFlat: psi~ induces no metric.
DuallyFlatWorkspace extended_workspace(const ExtendedLiftSpec& spec);

}  // namespace cflow
