#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "contactflow/legendre.hpp"

namespace cflow {

enum class Side { psi, phi };

// F on the chart coordinate (x on the psi side, p on the phi side).
// jacobian(i, j) = dF_i / dy_j.
struct DriftField {
  int n = 0;
  std::function<Vec(const Vec&)> eval;
  std::function<Mat(const Vec&)> jacobian;
};

// Jacobian by central differences when none is supplied.
DriftField make_drift(int n, std::function<Vec(const Vec&)> eval,
                      std::function<Mat(const Vec&)> jacobian = {});
// F(y) = A y + b.
DriftField linear_drift(const Mat& A, const Vec& b);
DriftField linear_drift(const Mat& A);

// True when |F| <= tol at every sample (the degenerate case; callers warn).
bool drift_vanishes_on(const DriftField& F, const std::vector<Vec>& samples, double tol = 0.0);

struct RestoringFunction {
  enum class Kind { linear, custom };
  Kind kind = Kind::linear;
  double gamma0 = 1.0;  // meaningful for linear only
  std::function<double(double)> eval;
  std::function<double(double)> derivative;

  static RestoringFunction linear(double gamma0);
  // Rejected unless eval(0) = 0 and eval(d) != 0 at a few d != 0.
  static RestoringFunction custom(std::function<double(double)> eval,
                                  std::function<double(double)> derivative = {});
};

// The potential is psi(x) on the psi side and phi(p) on the phi side.
struct LiftSpec {
  Side side = Side::psi;
  ConvexPotential potential;
  DriftField drift;
  RestoringFunction restoring = RestoringFunction::linear(1.0);

  int dim() const { return potential.n; }
  void validate() const;
};

LiftSpec psi_lift(const DuallyFlatWorkspace& ws, DriftField drift, RestoringFunction restoring);
LiftSpec phi_lift(const DuallyFlatWorkspace& ws, DriftField drift, RestoringFunction restoring);

// Side-aware Delta functions and embedding.
Deltas lift_deltas(const LiftSpec& spec, const CanonicalPoint& pt);
CanonicalPoint lift_embed(const LiftSpec& spec, const Vec& chart_coordinate);

// h = Delta.F + Gamma(Delta_0) with closed-form partials.
ContactHamiltonian build_hamiltonian(const LiftSpec& spec);

TangentVector restricted_field_psi(const LiftSpec& spec, const Vec& x);
TangentVector restricted_field_phi(const LiftSpec& spec, const Vec& p);
TangentVector restricted_field(const LiftSpec& spec, const Vec& chart_coordinate);

struct LiftedVelocity {
  TangentVector v;
  double d_delta0 = 0.0;  // -Gamma(Delta_0)
  Vec d_delta;            // -J^T Delta - Gamma'(Delta_0) Delta
};

LiftedVelocity lifted_field(const LiftSpec& spec, const CanonicalPoint& pt);

// Geodesic and gradient drifts on a dually flat workspace.
DriftField geodesic_drift_psi(const DuallyFlatWorkspace& ws, const Vec& p_from, const Vec& p_to);
DriftField geodesic_drift_phi(const DuallyFlatWorkspace& ws, const Vec& x_from, const Vec& x_to);
DriftField gradient_drift_psi(const DuallyFlatWorkspace& ws, const Vec& target_x);
DriftField gradient_drift_phi(const DuallyFlatWorkspace& ws, const Vec& target_p);

// Stability certificates.
struct LinearJacobianClass {
  double lambda0 = 0.0;  // claimed Jacobian lambda0 * I
};
struct RotationalClass {
  double omega = 0.0;  // claimed drift (omega y2, -omega y1)
};
struct OnsagerGradientClass {
  Mat L;          // constant SPD
  ScalarField U;  // drift is -L grad U
};
using StabilityClass = std::variant<LinearJacobianClass, RotationalClass, OnsagerGradientClass>;

struct StabilityQuery {
  StabilityClass claim;
  std::vector<Vec> samples;  // chart points at which the claim and conditions are checked
  double match_tol = 1e-6;   // agreement between the lift and the claimed class
};

enum class Verdict { approaches_submanifold, approaches_fixed_point, inconclusive };
std::string to_string(Verdict v);

struct CheckedCondition {
  std::string name;
  double value = 0.0;
  bool holds = false;
};

struct StabilityVerdict {
  Verdict verdict = Verdict::inconclusive;
  std::vector<CheckedCondition> conditions;
  // Onsager class: smallest eigenvalue of gamma0 L - L HessU L over the samples,
  // and the largest gamma0 for which some sample fails.
  double min_eigenvalue = 0.0;
  double spectral_bound = 0.0;
  std::string note;
};

StabilityVerdict stability_certificate(const LiftSpec& spec, const StabilityQuery& query);

// h^{-(n+1)} / Z; requires a linear restoring function and h > 0.
double invariant_density(const LiftSpec& spec, const CanonicalPoint& pt, double Z = 1.0);

}  // namespace cflow
