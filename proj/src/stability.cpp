#include <cmath>
#include <limits>

#include "contactflow/lifts.hpp"

namespace cflow {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::approaches_submanifold:
      return "asymptotically-approaches-submanifold";
    case Verdict::approaches_fixed_point:
      return "approaches-fixed-point";
    case Verdict::inconclusive:
      break;
  }
  return "inconclusive";
}

namespace {

std::vector<Vec> default_samples(int n) {
  std::vector<Vec> s{Vec::Zero(n)};
  for (int i = 0; i < n; ++i) {
    s.push_back(Vec::Unit(n, i));
    s.push_back(-0.5 * Vec::Unit(n, i));
  }
  s.push_back(Vec::Constant(n, 0.3));
  return s;
}

void add(StabilityVerdict& v, std::string name, double value, bool holds) {
  v.conditions.push_back({std::move(name), value, holds});
}

bool all_hold(const StabilityVerdict& v) {
  for (const auto& c : v.conditions)
    if (!c.holds) return false;
  return true;
}

void linear_class(const LiftSpec& spec, const LinearJacobianClass& c, const std::vector<Vec>& samples,
                  double tol, StabilityVerdict& v) {
  const int n = spec.dim();
  double mismatch = 0.0;
  for (const auto& y : samples)
    mismatch = std::max(mismatch, (spec.drift.jacobian(y) - c.lambda0 * Mat::Identity(n, n)).cwiseAbs().maxCoeff());
  const double g = spec.restoring.gamma0;
  add(v, "jacobian = lambda0 I", mismatch, mismatch <= tol * std::max(1.0, std::abs(c.lambda0)));
  add(v, "lambda0 + gamma0 > 0", c.lambda0 + g, c.lambda0 + g > 0.0);
  add(v, "gamma0 > 0", g, g > 0.0);
  if (all_hold(v)) v.verdict = Verdict::approaches_submanifold;
}

void rotational_class(const LiftSpec& spec, const RotationalClass& c, const std::vector<Vec>& samples,
                      double tol, StabilityVerdict& v) {
  if (spec.dim() != 2) {
    add(v, "n = 2", spec.dim(), false);
    return;
  }
  double mismatch = 0.0;
  for (const auto& y : samples) {
    Vec expect(2);
    expect << c.omega * y(1), -c.omega * y(0);
    mismatch = std::max(mismatch, (spec.drift.eval(y) - expect).cwiseAbs().maxCoeff());
  }
  const double g = spec.restoring.gamma0;
  add(v, "drift = (omega y2, -omega y1)", mismatch, mismatch <= tol * std::max(1.0, std::abs(c.omega)));
  add(v, "gamma0 > 0", g, g > 0.0);
  if (all_hold(v)) v.verdict = Verdict::approaches_submanifold;
}

void onsager_class(const LiftSpec& spec, const OnsagerGradientClass& c, const std::vector<Vec>& samples,
                   double tol, StabilityVerdict& v) {
  const int n = spec.dim();
  if (c.L.rows() != n || c.L.cols() != n || c.U.n != n) {
    add(v, "dimensions agree", 0.0, false);
    return;
  }
  Eigen::LLT<Mat> lchol(c.L);
  const bool l_spd = lchol.info() == Eigen::Success && (c.L - c.L.transpose()).cwiseAbs().maxCoeff() < 1e-12;
  add(v, "L symmetric positive definite", l_spd ? 1.0 : 0.0, l_spd);
  if (!l_spd) return;

  const double g = spec.restoring.gamma0;
  double mismatch = 0.0, u_min = std::numeric_limits<double>::infinity();
  double min_eig = std::numeric_limits<double>::infinity(), bound = -std::numeric_limits<double>::infinity();
  for (const auto& y : samples) {
    const Vec expect = -c.L * c.U.gradient(y);
    mismatch = std::max(mismatch, (spec.drift.eval(y) - expect).cwiseAbs().maxCoeff());
    u_min = std::min(u_min, c.U.value(y));
    const Mat LHL = c.L * c.U.hessian(y) * c.L;
    const Mat K = g * c.L - LHL;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (K + K.transpose()));
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    // gamma0 L - L H L is positive definite iff gamma0 exceeds the top eigenvalue
    // of the pencil (L H L, L).
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(Mat(0.5 * (LHL + LHL.transpose())), c.L);
    bound = std::max(bound, ges.eigenvalues().maxCoeff());
  }
  v.min_eigenvalue = min_eig;
  v.spectral_bound = bound;
  add(v, "drift = -L grad U", mismatch, mismatch <= tol * std::max(1.0, c.L.cwiseAbs().maxCoeff()));
  add(v, "U >= 0 on samples", u_min, u_min >= 0.0);
  add(v, "gamma0 > 0", g, g > 0.0);
  add(v, "gamma0 L - L HessU L positive definite on samples", min_eig, min_eig > 0.0);
  v.note = "positive definiteness is certified on the sampled points only; the fixed point is not searched for";
  if (all_hold(v)) v.verdict = Verdict::approaches_fixed_point;
}

}  // namespace

StabilityVerdict stability_certificate(const LiftSpec& spec, const StabilityQuery& query) {
  spec.validate();
  StabilityVerdict v;
  if (spec.restoring.kind != RestoringFunction::Kind::linear) {
    v.note = "custom restoring function: no certificate applies";
    return v;
  }
  const std::vector<Vec> samples = query.samples.empty() ? default_samples(spec.dim()) : query.samples;
  for (const auto& y : samples)
    if (y.size() != spec.dim()) throw MalformedInput("stability sample has the wrong dimension");
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, LinearJacobianClass>)
          linear_class(spec, c, samples, query.match_tol, v);
        else if constexpr (std::is_same_v<T, RotationalClass>)
          rotational_class(spec, c, samples, query.match_tol, v);
        else
          onsager_class(spec, c, samples, query.match_tol, v);
      },
      query.claim);
  return v;
}

}  // namespace cflow
