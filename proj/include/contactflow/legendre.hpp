#pragma once

#include <optional>
#include <vector>

#include "contactflow/convex.hpp"

namespace cflow {

struct LegendreOptions {
  double tol = 1e-12;  // infinity norm of grad psi(x) - p
  int max_iter = 100;
};

struct LegendreTransformResult {
  double phi_value = 0.0;
  Vec x_star;
  int iterations = 0;
  double residual = 0.0;
};

// Solves grad psi(x) = p by damped Newton with Armijo backtracking on
// |grad psi(x) - p|^2, then phi = x*.p - psi(x*).
LegendreTransformResult legendre_transform(const ConvexPotential& psi, const Vec& p,
                                           const std::optional<Vec>& x0 = std::nullopt,
                                           const LegendreOptions& opts = {});

// |x*(grad psi(x)) - x|_inf, with the solver started from its default guess.
double involution_check(const ConvexPotential& psi, const Vec& x, const LegendreOptions& opts = {});

// psi(x) + phi(p) - x.p, non-negative by Fenchel-Young.
double fenchel_young_gap(const ConvexPotential& psi, const Vec& x, const Vec& p,
                         const LegendreOptions& opts = {});

Mat metric(const ConvexPotential& psi, const Vec& x);
Mat dual_metric(const ConvexPotential& psi, const Vec& p, const LegendreOptions& opts = {});

// phi as a potential of its own: value, gradient x*(p) and Hessian
// inverse(Hess psi(x*)), all through the numeric transform.
ConvexPotential conjugate_potential(const ConvexPotential& psi, const LegendreOptions& opts = {});

CanonicalPoint embed_psi(const ConvexPotential& psi, const Vec& x);
CanonicalPoint embed_phi(const ConvexPotential& psi, const Vec& p, const LegendreOptions& opts = {});
// Same embedding when phi itself is the generating function.
CanonicalPoint embed_from_phi(const ConvexPotential& phi, const Vec& p);

struct Deltas {
  double d0 = 0.0;
  Vec d;
};

// Delta_0 = psi(x) - z, Delta_a = d_a psi(x) - p_a.
Deltas delta_psi(const ConvexPotential& psi, const CanonicalPoint& pt);
// Delta^0 = x.p - phi(p) - z, Delta^a = x^a - d^a phi(p), with phi from psi.
Deltas delta_phi(const ConvexPotential& psi, const CanonicalPoint& pt,
                 const LegendreOptions& opts = {});
// Same, phi given directly.
Deltas delta_from_phi(const ConvexPotential& phi, const CanonicalPoint& pt);

class DuallyFlatWorkspace {
 public:
  // Probes the Hessian at the default Newton start; a degenerate potential
  // is rejected with ConvexityError.
  explicit DuallyFlatWorkspace(ConvexPotential psi, LegendreOptions opts = {});

  const ConvexPotential& psi() const { return psi_; }
  const ConvexPotential& phi() const { return phi_; }
  const LegendreOptions& options() const { return opts_; }
  int dim() const { return psi_.n; }

  // Dual coordinates of a point given by x, and back.
  Vec p_of(const Vec& x) const { return psi_.gradient(x); }
  Vec x_of(const Vec& p, const std::optional<Vec>& hint = std::nullopt) const;

 private:
  ConvexPotential psi_;
  ConvexPotential phi_;
  LegendreOptions opts_;
};

// D(xi || xi') = psi(x) + phi(p') - x.p' with p' = grad psi(x').
double canonical_divergence(const DuallyFlatWorkspace& ws, const Vec& x, const Vec& x_prime);

// T[a](b, c) = d^3 psi / dx^a dx^b dx^c by central differences of the Hessian.
std::vector<Mat> dual_christoffel(const ConvexPotential& psi, const Vec& x);

}  // namespace cflow
