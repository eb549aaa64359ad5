#include "contactflow/pythagorean.hpp"

#include <cmath>
#include <sstream>

namespace cflow {

PythagoreanResult pythagorean_check(const DuallyFlatWorkspace& ws, const Vec& x1, const Vec& x2, const Vec& x3,
                                    const PythagoreanOptions& opts) {
  const int n = ws.dim();
  if (x1.size() != n || x2.size() != n || x3.size() != n)
    throw MalformedInput("pythagorean_check: dimension mismatch");
  const Vec p1 = ws.p_of(x1), p2 = ws.p_of(x2);

  PythagoreanResult r;
  r.orthogonality = (x3 - x2).dot(p1 - p2);
  const double scale = std::max(1.0, (x3 - x2).norm() * (p1 - p2).norm());
  if (std::abs(r.orthogonality) > opts.orthogonality_tol * scale) {
    std::ostringstream os;
    os << "not a Pythagorean configuration: (x3 - x2).(p1 - p2) = " << r.orthogonality;
    throw NotPythagorean(os.str());
  }

  const RestoringFunction g = RestoringFunction::linear(1.0);
  const LiftSpec dual_leg = psi_lift(ws, geodesic_drift_psi(ws, p1, p2), g);
  const CanonicalPoint a = restricted_exp(dual_leg, x1, 1.0, opts.integrator);
  r.x2_flow = a.x;

  const LiftSpec primal_leg = phi_lift(ws, geodesic_drift_phi(ws, x2, x3), g);
  const CanonicalPoint b = restricted_exp(primal_leg, ws.p_of(x2), 1.0, opts.integrator);
  r.x3_flow = b.x;

  r.endpoint_error = std::max((r.x2_flow - x2).cwiseAbs().maxCoeff(), (r.x3_flow - x3).cwiseAbs().maxCoeff());
  if (r.endpoint_error > opts.endpoint_tol * std::max(1.0, std::max(x2.norm(), x3.norm()))) {
    std::ostringstream os;
    os << "not a Pythagorean configuration: geodesic flows miss the supplied points by " << r.endpoint_error;
    throw NotPythagorean(os.str());
  }

  r.d31 = canonical_divergence(ws, r.x3_flow, x1);
  r.d32 = canonical_divergence(ws, r.x3_flow, r.x2_flow);
  r.d21 = canonical_divergence(ws, r.x2_flow, x1);
  r.residual = std::abs(r.d31 - r.d32 - r.d21);
  return r;
}

double pythagorean_residual(const DuallyFlatWorkspace& ws, const Vec& x1, const Vec& x2, const Vec& x3,
                            const PythagoreanOptions& opts) {
  return pythagorean_check(ws, x1, x2, x3, opts).residual;
}

Vec mixed_corner(const DuallyFlatWorkspace& ws, const Vec& x1, const Vec& x3, const std::vector<int>& from_third) {
  const int n = ws.dim();
  if (x1.size() != n || x3.size() != n) throw MalformedInput("mixed_corner: dimension mismatch");
  std::vector<bool> fixed(n, false);
  for (int i : from_third) {
    if (i < 0 || i >= n) throw MalformedInput("mixed_corner: slot out of range");
    fixed[i] = true;
  }
  std::vector<int> free;
  for (int i = 0; i < n; ++i)
    if (!fixed[i]) free.push_back(i);

  const Vec p1 = ws.p_of(x1);
  Vec x = x1;
  for (int i = 0; i < n; ++i)
    if (fixed[i]) x(i) = x3(i);
  if (free.empty()) return x;

  // Newton on the free slots: d_j psi(x) = p1_j. The principal sub-block of
  // the Hessian is SPD, so the step is well defined.
  const int m = static_cast<int>(free.size());
  const LegendreOptions& lo = ws.options();
  for (int it = 0; it < lo.max_iter; ++it) {
    const Vec g = ws.psi().gradient(x);
    Vec r(m);
    for (int k = 0; k < m; ++k) r(k) = g(free[k]) - p1(free[k]);
    if (r.cwiseAbs().maxCoeff() <= lo.tol) return x;
    const Mat H = metric(ws.psi(), x);
    Mat S(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) S(a, b) = H(free[a], free[b]);
    const Vec d = S.llt().solve(-r);
    double alpha = 1.0;
    const double merit = r.squaredNorm();
    while (alpha > 1e-12) {
      Vec xt = x;
      for (int k = 0; k < m; ++k) xt(free[k]) += alpha * d(k);
      const Vec gt = ws.psi().gradient(xt);
      double mt = 0.0;
      for (int k = 0; k < m; ++k) mt += std::pow(gt(free[k]) - p1(free[k]), 2);
      if (std::isfinite(mt) && mt <= (1.0 - 2e-4 * alpha) * merit) {
        x = xt;
        break;
      }
      alpha *= 0.5;
    }
    if (alpha <= 1e-12) break;
  }
  const Vec g = ws.psi().gradient(x);
  double res = 0.0;
  for (int j : free) res = std::max(res, std::abs(g(j) - p1(j)));
  if (res > lo.tol) throw NonConvergence("mixed_corner: no convergence", x, res, lo.max_iter);
  return x;
}

}  // namespace cflow
