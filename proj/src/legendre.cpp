#include "contactflow/legendre.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace cflow {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kMinAlpha = 1e-12;

Vec initial_guess(const ConvexPotential& psi, const std::optional<Vec>& x0) {
  if (x0) {
    if (x0->size() != psi.n) throw MalformedInput("Newton hint has the wrong dimension");
    return *x0;
  }
  Vec zero = Vec::Zero(psi.n);
  if (!psi.domain || psi.domain->contains(zero)) return zero;
  return psi.domain->center();
}

}  // namespace

LegendreTransformResult legendre_transform(const ConvexPotential& psi, const Vec& p,
                                           const std::optional<Vec>& x0, const LegendreOptions& opts) {
  if (p.size() != psi.n) throw MalformedInput("legendre_transform: p has the wrong dimension");
  if (!p.allFinite()) throw MalformedInput("legendre_transform: p is not finite");

  Vec x = initial_guess(psi, x0);
  Vec r = psi.gradient(x) - p;
  if (!r.allFinite()) throw EvaluationError("legendre_transform: gradient not finite at the start");
  double merit = r.squaredNorm();
  double res = r.cwiseAbs().maxCoeff();
  int it = 0;
  // Convexity is checked at the start even when it already solves the equation.
  Mat H = psi.hessian(x);
  require_spd(H, "legendre_transform");
  for (; it < opts.max_iter && res > opts.tol; ++it) {
    if (it > 0) H = psi.hessian(x);
    try {
      require_spd(H, "legendre_transform");
    } catch (const ConvexityError&) {
      // Degenerate curvature away from a valid start means p is out of range.
      std::ostringstream os;
      os << "legendre_transform: Hessian degenerated along the iteration, residual " << res;
      throw NonConvergence(os.str(), x, res, it);
    }
    const Vec d = H.llt().solve(-r);
    double alpha = 1.0;
    bool accepted = false;
    while (alpha >= kMinAlpha) {
      Vec xt = x + alpha * d;
      if (!psi.domain || psi.domain->contains(xt)) {
        Vec rt = psi.gradient(xt) - p;
        if (rt.allFinite()) {
          const double mt = rt.squaredNorm();
          if (mt <= (1.0 - 2.0 * kArmijo * alpha) * merit) {
            x = std::move(xt);
            r = std::move(rt);
            merit = mt;
            accepted = true;
            break;
          }
        }
      }
      alpha *= 0.5;
    }
    res = r.cwiseAbs().maxCoeff();
    if (!accepted) {
      std::ostringstream os;
      os << "legendre_transform: line search stalled with residual " << res;
      throw NonConvergence(os.str(), x, res, it);
    }
  }
  if (res > opts.tol) {
    std::ostringstream os;
    os << "legendre_transform: no convergence in " << opts.max_iter << " iterations, residual " << res;
    throw NonConvergence(os.str(), x, res, it);
  }
  LegendreTransformResult out;
  out.x_star = x;
  out.phi_value = x.dot(p) - psi.value(x);
  out.iterations = it;
  out.residual = res;
  return out;
}

double involution_check(const ConvexPotential& psi, const Vec& x, const LegendreOptions& opts) {
  const auto r = legendre_transform(psi, psi.gradient(x), std::nullopt, opts);
  return (r.x_star - x).cwiseAbs().maxCoeff();
}

double fenchel_young_gap(const ConvexPotential& psi, const Vec& x, const Vec& p,
                         const LegendreOptions& opts) {
  const auto r = legendre_transform(psi, p, std::nullopt, opts);
  return psi.value(x) + r.phi_value - x.dot(p);
}

Mat metric(const ConvexPotential& psi, const Vec& x) {
  if (x.size() != psi.n) throw MalformedInput("metric: x has the wrong dimension");
  Mat H = psi.hessian(x);
  require_spd(H, "metric");
  return H;
}

Mat dual_metric(const ConvexPotential& psi, const Vec& p, const LegendreOptions& opts) {
  const auto r = legendre_transform(psi, p, std::nullopt, opts);
  const Mat H = metric(psi, r.x_star);
  return H.llt().solve(Mat::Identity(psi.n, psi.n));
}

ConvexPotential conjugate_potential(const ConvexPotential& psi, const LegendreOptions& opts) {
  ConvexPotential phi;
  phi.n = psi.n;
  phi.name = psi.name.empty() ? "conjugate" : "conjugate(" + psi.name + ")";
  phi.value = [psi, opts](const Vec& p) { return legendre_transform(psi, p, std::nullopt, opts).phi_value; };
  phi.gradient = [psi, opts](const Vec& p) -> Vec {
    return legendre_transform(psi, p, std::nullopt, opts).x_star;
  };
  phi.hessian = [psi, opts](const Vec& p) -> Mat { return dual_metric(psi, p, opts); };
  return phi;
}

CanonicalPoint embed_psi(const ConvexPotential& psi, const Vec& x) {
  if (x.size() != psi.n) throw MalformedInput("embed_psi: x has the wrong dimension");
  return CanonicalPoint(x, psi.gradient(x), psi.value(x));
}

CanonicalPoint embed_phi(const ConvexPotential& psi, const Vec& p, const LegendreOptions& opts) {
  const auto r = legendre_transform(psi, p, std::nullopt, opts);
  return CanonicalPoint(r.x_star, p, p.dot(r.x_star) - r.phi_value);
}

CanonicalPoint embed_from_phi(const ConvexPotential& phi, const Vec& p) {
  if (p.size() != phi.n) throw MalformedInput("embed: p has the wrong dimension");
  const Vec x = phi.gradient(p);
  return CanonicalPoint(x, p, p.dot(x) - phi.value(p));
}

Deltas delta_psi(const ConvexPotential& psi, const CanonicalPoint& pt) {
  if (pt.dim() != psi.n) throw MalformedInput("delta_psi: dimension mismatch");
  return {psi.value(pt.x) - pt.z, psi.gradient(pt.x) - pt.p};
}

Deltas delta_from_phi(const ConvexPotential& phi, const CanonicalPoint& pt) {
  if (pt.dim() != phi.n) throw MalformedInput("delta_phi: dimension mismatch");
  return {pt.x.dot(pt.p) - phi.value(pt.p) - pt.z, pt.x - phi.gradient(pt.p)};
}

Deltas delta_phi(const ConvexPotential& psi, const CanonicalPoint& pt, const LegendreOptions& opts) {
  if (pt.dim() != psi.n) throw MalformedInput("delta_phi: dimension mismatch");
  const auto r = legendre_transform(psi, pt.p, std::nullopt, opts);
  return {pt.x.dot(pt.p) - r.phi_value - pt.z, pt.x - r.x_star};
}

DuallyFlatWorkspace::DuallyFlatWorkspace(ConvexPotential psi, LegendreOptions opts)
    : psi_(std::move(psi)), opts_(opts) {
  if (psi_.n < 1 || !psi_.value || !psi_.gradient || !psi_.hessian)
    throw MalformedInput("workspace needs a complete potential");
  require_spd(psi_.hessian(initial_guess(psi_, std::nullopt)), "dually flat workspace");
  phi_ = conjugate_potential(psi_, opts_);
}

Vec DuallyFlatWorkspace::x_of(const Vec& p, const std::optional<Vec>& hint) const {
  return legendre_transform(psi_, p, hint, opts_).x_star;
}

double canonical_divergence(const DuallyFlatWorkspace& ws, const Vec& x, const Vec& x_prime) {
  const auto& psi = ws.psi();
  if (x.size() != psi.n || x_prime.size() != psi.n)
    throw MalformedInput("canonical_divergence: dimension mismatch");
  const Vec pp = psi.gradient(x_prime);
  const double phi_pp = legendre_transform(psi, pp, x_prime, ws.options()).phi_value;
  return psi.value(x) + phi_pp - x.dot(pp);
}

std::vector<Mat> dual_christoffel(const ConvexPotential& psi, const Vec& x) {
  std::vector<Mat> T(psi.n);
  Vec y = x;
  for (int a = 0; a < psi.n; ++a) {
    const double s = 1e-4 * std::max(1.0, std::abs(x(a)));
    y(a) = x(a) + s;
    const Mat hp = psi.hessian(y);
    y(a) = x(a) - s;
    const Mat hm = psi.hessian(y);
    y(a) = x(a);
    T[a] = (hp - hm) / (2.0 * s);
  }
  return T;
}

}  // namespace cflow
