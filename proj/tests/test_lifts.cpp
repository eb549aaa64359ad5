#include <doctest.h>

#include "contactflow/flows.hpp"
#include "contactflow/models.hpp"
#include "contactflow/report.hpp"
#include "helpers.hpp"

using namespace cflow;
using testing::vec;

namespace {

LiftSpec quad_lift(double gamma0) {
  return LiftSpec{Side::psi, potentials::quadratic(Mat::Identity(1, 1)), linear_drift(-Mat::Identity(1, 1)),
                  RestoringFunction::linear(gamma0)};
}

CanonicalPoint run(const LiftSpec& s, const CanonicalPoint& start, double t) {
  return unflatten_point(flow(lifted_system(s), flatten(start), t), s.dim());
}

}  // namespace

TEST_SUITE("lifts") {
  TEST_CASE("restoring function validation") {
    CHECK_THROWS_AS(RestoringFunction::custom([](double d) { return d + 1.0; }), MalformedInput);
    CHECK_THROWS_AS(RestoringFunction::custom([](double) { return 0.0; }), MalformedInput);
    const RestoringFunction g = RestoringFunction::custom([](double d) { return d * d * d + d; });
    CHECK(g.derivative(0.5) == doctest::Approx(1.75).epsilon(1e-6));
  }

  TEST_CASE("dimension mismatch is rejected") {
    LiftSpec s{Side::psi, potentials::quadratic(Mat::Identity(2, 2)), linear_drift(-Mat::Identity(1, 1)),
               RestoringFunction::linear(1.0)};
    CHECK_THROWS_AS(s.validate(), MalformedInput);
  }

  TEST_CASE("hamiltonian values") {
    const LiftSpec spin = spin_spec({1.0, 1.0, 1.0});
    CHECK(build_hamiltonian(spin)({vec({0}), vec({0.3}), std::log(2.0)}) == doctest::Approx(-0.3).epsilon(1e-14));
    CHECK(build_hamiltonian(quad_lift(1.0))({vec({1}), vec({0}), 0}) == doctest::Approx(-0.5));
    std::mt19937_64 rng(2);
    const LiftSpec rl = rl_spec({1.0, 0.0, 2.0, 0.0});
    for (int k = 0; k < 50; ++k) {
      const Vec x = testing::uniform(rng, 1, -3, 3);
      CHECK(build_hamiltonian(spin)(lift_embed(spin, x)) == 0.0);
      CHECK(std::abs(build_hamiltonian(rl)(lift_embed(rl, x))) < 1e-15);
    }
  }

  TEST_CASE("restricted fields") {
    const LiftSpec rc = rc_spec({1.0, 1.0});
    const TangentVector v = restricted_field_psi(rc, vec({1}));
    CHECK(v.dx(0) == -1.0);
    CHECK(v.dp(0) == -1.0);
    CHECK(v.dz == -1.0);
    const LiftSpec rl = rl_spec({1.0, 0.0, 1.0});
    const TangentVector w = restricted_field_phi(rl, vec({2}));
    CHECK(w.dx(0) == doctest::Approx(-2.0));
    CHECK(w.dp(0) == doctest::Approx(-2.0));
    CHECK(w.dz == doctest::Approx(-4.0));
    const LiftSpec zero{Side::psi, potentials::log_cosh(), linear_drift(Mat::Zero(1, 1)), RestoringFunction::linear(1)};
    const TangentVector z = restricted_field(zero, vec({0.4}));
    CHECK(z.dx(0) == 0.0);
    CHECK(z.dp(0) == 0.0);
    CHECK(z.dz == 0.0);
    CHECK(drift_vanishes_on(zero.drift, {vec({0.4}), vec({-1})}));
  }

  TEST_CASE("restricted equals ambient on the submanifold") {
    std::mt19937_64 rng(4);
    Mat A(2, 2);
    A << -1.0, 0.4, -0.3, -0.2;
    const LiftSpec psi_side{Side::psi, potentials::spin_product(2), linear_drift(A, vec({0.1, -0.2})),
                            RestoringFunction::linear(1.3)};
    const LiftSpec phi_side = phi_lift(DuallyFlatWorkspace(potentials::spin_product(2)), linear_drift(A),
                                       RestoringFunction::linear(0.7));
    for (int k = 0; k < 100; ++k) {
      const Vec x = testing::uniform(rng, 2, -2, 2);
      const TangentVector amb = hamiltonian_vector_field(build_hamiltonian(psi_side), lift_embed(psi_side, x));
      CHECK(max_abs_diff(amb, restricted_field(psi_side, x)) < 1e-10);
      const Vec p = testing::uniform(rng, 2, -0.9, 0.9);
      const TangentVector amb2 = hamiltonian_vector_field(build_hamiltonian(phi_side), lift_embed(phi_side, p));
      CHECK(max_abs_diff(amb2, restricted_field(phi_side, p)) < 1e-10);
      const LiftedVelocity lv = lifted_field(psi_side, lift_embed(psi_side, x));
      CHECK(max_abs_diff(lv.v, restricted_field(psi_side, x)) < 1e-10);
    }
  }

  TEST_CASE("delta velocities match the triangular system") {
    Mat A(2, 2);
    A << -1.0, 0.4, -0.3, -0.2;
    const LiftSpec s{Side::psi, potentials::spin_product(2), linear_drift(A), RestoringFunction::linear(1.3)};
    const CanonicalPoint pt(vec({0.3, -0.5}), vec({0.1, 0.2}), 1.7);
    const LiftedVelocity lv = lifted_field(s, pt);
    // Directional derivative of the Delta functions along the field.
    const double h = 1e-6;
    const Deltas a = lift_deltas(s, shifted(pt, lv.v, -h)), b = lift_deltas(s, shifted(pt, lv.v, h));
    CHECK(std::abs((b.d0 - a.d0) / (2 * h) - lv.d_delta0) < 1e-7);
    CHECK(((b.d - a.d) / (2 * h) - lv.d_delta).cwiseAbs().maxCoeff() < 1e-7);
    const Deltas d = lift_deltas(s, pt);
    CHECK(std::abs(lv.d_delta0 + 1.3 * d.d0) < 1e-14);
    CHECK((lv.d_delta - (-A.transpose() * d.d - 1.3 * d.d)).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("phi and psi charts give the same curve for quadratic potentials") {
    // psi = x^2/2 (so phi = p^2/2); drift in x is -x, in p it is -p.
    const DuallyFlatWorkspace ws(potentials::quadratic(Mat::Identity(1, 1)));
    const LiftSpec a = psi_lift(ws, linear_drift(-Mat::Identity(1, 1)), RestoringFunction::linear(1));
    const LiftSpec b = phi_lift(ws, linear_drift(-Mat::Identity(1, 1)), RestoringFunction::linear(1));
    const CanonicalPoint ea = restricted_exp(a, vec({1.5}), 0.8), eb = restricted_exp(b, vec({1.5}), 0.8);
    CHECK(std::abs(ea.x(0) - eb.x(0)) < 1e-9);
    CHECK(std::abs(ea.p(0) - eb.p(0)) < 1e-9);
    CHECK(std::abs(ea.z - eb.z) < 1e-9);
  }

  TEST_CASE("decay of h and delta0 along the ambient flow") {
    const LiftSpec s = quad_lift(1.0);
    const CanonicalPoint start(vec({1}), vec({0}), 0);
    const ContactHamiltonian h = build_hamiltonian(s);
    CHECK(std::abs(h(run(s, start, 1.0)) - h(start) / std::exp(1.0)) < 1e-6);
    const LiftSpec s2 = quad_lift(2.0);
    const double d0 = lift_deltas(s2, start).d0;
    CHECK(std::abs(lift_deltas(s2, run(s2, start, 0.5)).d0 - d0 / std::exp(1.0)) < 1e-9);
  }

  TEST_CASE("delta decay for a Jacobian lambda0 I drift") {
    const double L0 = 0.7, g0 = 1.2;
    const LiftSpec s{Side::psi, potentials::spin_product(2), linear_drift(L0 * Mat::Identity(2, 2)),
                     RestoringFunction::linear(g0)};
    const CanonicalPoint start(vec({0.2, -0.1}), vec({0.5, 0.3}), 2.0);
    const CanonicalPoint end = run(s, start, 1.0);
    const double ratio = lift_deltas(s, end).d.norm() / lift_deltas(s, start).d.norm();
    CHECK(std::abs(ratio / std::exp(-(g0 + L0)) - 1) < 1e-6);
  }

  TEST_CASE("dual geodesic") {
    const DuallyFlatWorkspace ws(potentials::log_cosh());
    const DriftField z = geodesic_drift_psi(ws, vec({0.3}), vec({0.3}));
    CHECK(z.eval(vec({1.1}))(0) == 0.0);
    const LiftSpec s = psi_lift(ws, geodesic_drift_psi(ws, vec({0}), vec({0.5})), RestoringFunction::linear(1));
    const CanonicalPoint e = restricted_exp(s, ws.x_of(vec({0})), 1.0);
    CHECK(std::abs(e.p(0) - 0.5) < 1e-8);
    // Quadratic psi: x moves linearly too.
    Mat M(2, 2);
    M << 2, 0.5, 0.5, 1;
    const DuallyFlatWorkspace wq(potentials::quadratic(M));
    const LiftSpec q = psi_lift(wq, geodesic_drift_psi(wq, vec({0, 0}), vec({1, -1})), RestoringFunction::linear(1));
    const Trajectory tr = integrate(restricted_system(q), flatten(lift_embed(q, vec({0, 0}))), 0, 1);
    for (int a = 0; a < 2; ++a) {
      std::vector<double> xs;
      for (const auto& y : tr.states) xs.push_back(y(a));
      CHECK(fit_line(tr.times, xs).max_residual < 1e-10);
    }
  }

  TEST_CASE("primal geodesic") {
    const DuallyFlatWorkspace ws(potentials::log_cosh());
    CHECK(geodesic_drift_phi(ws, vec({1}), vec({1})).eval(vec({0.2}))(0) == 0.0);
    const LiftSpec s = phi_lift(ws, geodesic_drift_phi(ws, vec({-0.5}), vec({1.2})), RestoringFunction::linear(1));
    const Trajectory tr = integrate(restricted_system(s), flatten(lift_embed(s, ws.p_of(vec({-0.5})))), 0, 1);
    std::vector<double> xs;
    for (const auto& y : tr.states) xs.push_back(y(0));
    CHECK(fit_line(tr.times, xs).max_residual < 1e-8);
    CHECK(std::abs(xs.back() - 1.2) < 1e-8);
    // Quadratic: both charts draw the same straight line.
    const DuallyFlatWorkspace wq(potentials::quadratic(Mat::Identity(1, 1)));
    const LiftSpec a = phi_lift(wq, geodesic_drift_phi(wq, vec({0}), vec({2})), RestoringFunction::linear(1));
    const LiftSpec b = psi_lift(wq, geodesic_drift_psi(wq, vec({0}), vec({2})), RestoringFunction::linear(1));
    CHECK(std::abs(restricted_exp(a, vec({0}), 0.6).x(0) - restricted_exp(b, vec({0}), 0.6).x(0)) < 1e-10);
  }

  TEST_CASE("gradient flows") {
    const DuallyFlatWorkspace ws(potentials::log_cosh());
    const LiftSpec still = psi_lift(ws, gradient_drift_psi(ws, vec({0.4})), RestoringFunction::linear(1));
    CHECK(std::abs(restricted_field(still, vec({0.4})).dx(0)) < 1e-15);
    const LiftSpec s = psi_lift(ws, gradient_drift_psi(ws, vec({0})), RestoringFunction::linear(1));
    const CanonicalPoint e = restricted_exp(s, ws.x_of(vec({0.9})), 1.0);
    CHECK(std::abs(e.p(0) - 0.9 / std::exp(1.0)) < 1e-8);
    IntegratorConfig cfg;
    cfg.output_dt = 0.02;
    const Trajectory tr = integrate(restricted_system(s), flatten(lift_embed(s, vec({2.0}))), 0, 1, cfg);
    CHECK(tr.states.size() == 51);
    for (size_t k = 1; k < tr.states.size(); ++k)
      CHECK(canonical_divergence(ws, tr.states[k].head(1), vec({0})) <
            canonical_divergence(ws, tr.states[k - 1].head(1), vec({0})));
  }

  TEST_CASE("gradient flows on the phi side") {
    const DuallyFlatWorkspace ws(potentials::log_cosh());
    const LiftSpec still = phi_lift(ws, gradient_drift_phi(ws, vec({0.4})), RestoringFunction::linear(1));
    CHECK(std::abs(restricted_field(still, vec({0.4})).dp(0)) < 1e-10);
    const LiftSpec s = phi_lift(ws, gradient_drift_phi(ws, vec({0.2})), RestoringFunction::linear(1));
    const double xt = std::atanh(0.2), x0 = 1.5;
    const CanonicalPoint e = restricted_exp(s, ws.p_of(vec({x0})), 1.0);
    CHECK(std::abs(e.x(0) - (xt + (x0 - xt) / std::exp(1.0))) < 1e-8);
    IntegratorConfig cfg;
    cfg.output_dt = 0.02;
    const Trajectory tr = integrate(restricted_system(s), flatten(lift_embed(s, ws.p_of(vec({x0})))), 0, 1, cfg);
    for (size_t k = 1; k < tr.states.size(); ++k)
      CHECK(canonical_divergence(ws, vec({xt}), tr.states[k].head(1)) <
            canonical_divergence(ws, vec({xt}), tr.states[k - 1].head(1)));
  }

  TEST_CASE("stability certificates") {
    const LiftSpec a{Side::psi, potentials::spin_product(2), linear_drift(Mat::Identity(2, 2)),
                     RestoringFunction::linear(2.0)};
    CHECK(stability_certificate(a, {LinearJacobianClass{1.0}}).verdict == Verdict::approaches_submanifold);
    const LiftSpec b{Side::psi, potentials::spin_product(2), linear_drift(-3.0 * Mat::Identity(2, 2)),
                     RestoringFunction::linear(2.0)};
    const StabilityVerdict vb = stability_certificate(b, {LinearJacobianClass{-3.0}});
    CHECK(vb.verdict == Verdict::inconclusive);
    CHECK_FALSE(vb.conditions.empty());
    // The claimed class must match the actual drift.
    CHECK(stability_certificate(a, {LinearJacobianClass{0.5}}).verdict == Verdict::inconclusive);
    const LiftSpec osc = oscillatory_spec(potentials::quadratic(Mat::Identity(2, 2)), 5.0, 1.0);
    CHECK(stability_certificate(osc, {RotationalClass{5.0}}).verdict == Verdict::approaches_submanifold);
    CHECK(to_string(Verdict::approaches_submanifold) == "asymptotically-approaches-submanifold");
    LiftSpec custom = a;
    custom.restoring = RestoringFunction::custom([](double d) { return d * d * d + d; });
    CHECK(stability_certificate(custom, {LinearJacobianClass{1.0}}).verdict == Verdict::inconclusive);
  }

  TEST_CASE("oscillatory delta envelope") {
    const LiftSpec osc = oscillatory_spec(potentials::quadratic(Mat::Identity(2, 2)), 5.0, 1.0);
    const CanonicalPoint start(vec({1, 0}), vec({1.3, -0.4}), 0.2);
    const double d0 = lift_deltas(osc, start).d.norm();
    for (double t : {0.5, 1.0, 2.0}) {
      const double dt = lift_deltas(osc, run(osc, start, t)).d.norm();
      CHECK(std::abs(dt / (d0 * std::exp(-t)) - 1) < 1e-6);
    }
  }

  TEST_CASE("invariant density") {
    // h = -z has dh/dz = -1; use a lift with h = 2 at the point instead.
    const LiftSpec s = quad_lift(1.0);
    // h = Delta.F + Delta0 = (x - p)(-x) + x^2/2 - z; at x = 0 it is -z.
    const CanonicalPoint pt(vec({0}), vec({0}), -2.0);
    CHECK(build_hamiltonian(s)(pt) == 2.0);
    CHECK(invariant_density(s, pt) == doctest::Approx(0.25));
    CHECK(invariant_density(s, pt, 4.0) == doctest::Approx(0.0625));
    CHECK_THROWS_AS(invariant_density(s, {vec({0}), vec({0}), 2.0}), OutsideInvariantChart);
    // Transport identity and ratio law along a trajectory.
    const ContactHamiltonian h = build_hamiltonian(s);
    const double s_step = 0.3, eps = 1e-5;
    const CanonicalPoint a = run(s, pt, 0.4), b = run(s, pt, 0.4 + s_step);
    CHECK(invariant_density(s, b) / invariant_density(s, a) == doctest::Approx(std::exp(2 * s_step)).epsilon(1e-8));
    const double fm = invariant_density(s, run(s, pt, 0.4 - eps)), fp = invariant_density(s, run(s, pt, 0.4 + eps));
    const double kappa = 2 * h.partials(a).hz;
    CHECK(std::abs((fp - fm) / (2 * eps) + kappa * invariant_density(s, a)) < 1e-6);
  }

  TEST_CASE("generic drifts do not conserve psi, antisymmetric gradients do") {
    const ConvexPotential psi = potentials::spin_product(2);
    Mat A(2, 2);
    A << -1.0, 0.4, -0.3, -0.2;
    const Vec x = vec({0.5, -0.8});
    CHECK(std::abs(psi.gradient(x).dot(linear_drift(A).eval(x))) > 0.01);
    auto rot = [psi](const Vec& y) {
      const Vec g = psi.gradient(y);
      return vec({g(1), -g(0)});
    };
    std::mt19937_64 rng(8);
    for (int k = 0; k < 20; ++k) {
      const Vec y = testing::uniform(rng, 2, -2, 2);
      CHECK(std::abs(psi.gradient(y).dot(rot(y))) < 1e-15);
    }
  }
}
