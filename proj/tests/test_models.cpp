#include <doctest.h>

#include "contactflow/flows.hpp"
#include "contactflow/models.hpp"
#include "helpers.hpp"

using namespace cflow;
using testing::vec;

namespace {

Vec run_lift(const LiftSpec& s, const Vec& y0, double t) { return flow(lifted_system(s), y0, t); }

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(rc_spec({0.0, 1.0}), MalformedInput);
    CHECK_THROWS_AS(rc_spec({1.0, -1.0}), MalformedInput);
    CHECK_THROWS_AS(rl_spec({1.0, 0.0, 0.0}), MalformedInput);
    CHECK_THROWS_AS(rc_thermal_spec({1.0, 1.0, 0.0, 0.0}), MalformedInput);
    CHECK_THROWS_AS(rlc_spec({-1.0, 1.0, 1.0}), MalformedInput);
    CHECK_NOTHROW(rlc_spec({0.0, 1.0, 1.0}));
    Mat L(2, 2);
    L << 1, 2, 2, 1;
    CHECK_THROWS_AS(make_onsager(L), ConvexityError);
  }

  TEST_CASE("RC relaxation") {
    const LiftSpec s = rc_spec({1.0, 1.0});
    const Vec y = run_lift(s, flatten(lift_embed(s, vec({1}))), 1.0);
    CHECK(std::abs(y(0) - std::exp(-1.0)) < 1e-8);
    CHECK(restricted_field(s, vec({1})).dz == doctest::Approx(-1.0));
    const ExtendedLiftSpec th = rc_thermal_spec({1.0, 1.0, 0.0, 1.0});
    const ExtendedTangent v = restricted_extended_field(th, vec({1}));
    CHECK(v.dx_extra == doctest::Approx(1.0));
    // dH_tot/dt = grad psi . dx + T0 dS/dt = 0.
    CHECK(std::abs(th.base.potential.gradient(vec({1})).dot(v.dx) + th.anchor * v.dx_extra) < 1e-15);
  }

  TEST_CASE("RL relaxation") {
    const LiftSpec s = rl_spec({1.0, 0.0, 1.0});
    CHECK(s.side == Side::phi);
    const Vec y = run_lift(s, flatten(lift_embed(s, vec({2}))), 1.0);
    CHECK(std::abs(y(1) - 2.0 / std::exp(1.0)) < 1e-8);
    CHECK(restricted_field(s, vec({2})).dz == doctest::Approx(-4.0));
    const ExtendedLiftSpec th = rl_thermal_spec({1.0, 0.0, 1.0, 1.0});
    // N = L I with I = 2.
    CHECK(restricted_extended_field(th, vec({2})).dx_extra == doctest::Approx(4.0));
  }

  TEST_CASE("RC and RL are images of each other under relabeling") {
    const LiftSpec rc = rc_spec({2.0, 0.5});
    // Time constants RC and L/R agree only when R also maps to 1/R.
    const LiftSpec rl = rl_thermal_spec({0.5, 0.0, 0.5, 1.0}).base;  // psi side in N
    const Vec a = flow(restricted_system(rc), flatten(lift_embed(rc, vec({1.3}))), 2.0);
    const Vec b = flow(restricted_system(rl), flatten(lift_embed(rl, vec({1.3}))), 2.0);
    CHECK(std::abs(a(0) - b(0)) < 1e-9);
    CHECK(std::abs(a(1) - b(1)) < 1e-9);
  }

  TEST_CASE("RLC damped oscillator") {
    const LiftSpec s = rlc_spec({1.0, 1.0, 1.0});
    IntegratorConfig cfg;
    cfg.output_dt = 0.1;
    const Trajectory tr = integrate(lifted_system(s), flatten(lift_embed(s, vec({1, 0}))), 0.0, 5.0, cfg);
    // Eigenvalues (-1 +- i sqrt 3)/2: closed form from the real 2x2 decomposition.
    const double w = std::sqrt(3.0) / 2;
    for (size_t k = 0; k < tr.times.size(); ++k) {
      const double t = tr.times[k], e = std::exp(-t / 2);
      const double V = e * (std::cos(w * t) + std::sin(w * t) / (2 * w));
      const double I = e * (-std::sin(w * t) / w);
      CHECK(std::abs(tr.states[k](2) - V) < 1e-6);
      CHECK(std::abs(tr.states[k](3) - I) < 1e-6);
    }
  }

  TEST_CASE("LC oscillator conserves H*") {
    const LiftSpec s = rlc_spec({0.0, 1.0, 1.0});
    const Vec y0 = flatten(lift_embed(s, vec({1, 0})));
    const double T = 2 * M_PI;
    const Vec y = flow(lifted_system(s), y0, T);
    const double e0 = s.potential.value(y0.segment(2, 2)), e1 = s.potential.value(y.segment(2, 2));
    CHECK(std::abs(e1 - e0) < 1e-9);
    CHECK(std::abs(y(4) - y0(4)) < 1e-9);  // dz/dt = -R I^2 = 0
  }

  TEST_CASE("thermal RLC") {
    const ExtendedLiftSpec s = rlc_thermal_spec({1.0, 1.0, 1.0, 2.0});
    const ExtendedPoint start = embed_extended(s, vec({1, 0.5}), 0.0);
    const Trajectory tr = integrate(extended_system(s), flatten_state(start), 0.0, 3.0);
    for (const auto& y : tr.states) {
      const ExtendedPoint pt = unflatten_state(y, 2);
      const double I = pt.x(1) / 1.0;
      CHECK(std::abs(extended_lifted_field(s, pt).dx_extra - I * I / 2.0) < 1e-9);
      CHECK(std::abs(generating_value(s, pt) - generating_value(s, start)) < 1e-9);
    }
  }

  TEST_CASE("spin relaxation") {
    const SpinParams sp{1.0, 1.0, 0.5};
    const LiftSpec s = spin_spec(sp);
    const CanonicalPoint start(vec({0.2}), vec({0.5}), 1.0);
    const CanonicalPoint end = unflatten_point(run_lift(s, flatten(start), 60.0), 1);
    CHECK(std::abs(end.p(0) - std::tanh(1.0)) < 1e-6);
    CHECK(std::abs(end.x(0) - 1.0) < 1e-4);
    CHECK(std::abs(end.z - (std::log(std::cosh(1.0)) + std::log(2.0))) < 1e-6);
    // Lambda0 = 0: no motion in x, p relaxes towards tanh x.
    const LiftSpec free = spin_spec({1.0, 2.0, 0.0});
    const TangentVector v = hamiltonian_vector_field(build_hamiltonian(free), start);
    CHECK(v.dx(0) == 0.0);
    CHECK(v.dp(0) == doctest::Approx(2.0 * (std::tanh(0.2) - 0.5)).epsilon(1e-14));
    // Ambient component equations of the controlled model.
    const TangentVector u = hamiltonian_vector_field(build_hamiltonian(s), start);
    const double x = 0.2, p = 0.5, z = 1.0, g0 = 1.0, L0 = 0.5, th = 1.0;
    const double psi = std::log(std::cosh(x)) + std::log(2.0), dpsi = std::tanh(x), d2 = 1 - dpsi * dpsi;
    CHECK(u.dx(0) == doctest::Approx(-L0 * (x - th)));
    CHECK(u.dp(0) == doctest::Approx(-L0 * (x - th) * d2 - L0 * (dpsi - p) + g0 * (dpsi - p)));
    const double F = -L0 * (x - th);
    CHECK(u.dz == doctest::Approx((dpsi - p) * F + g0 * (psi - z) + p * F));
  }

  TEST_CASE("spin delta laws") {
    const SpinParams sp{1.0, 1.0, 0.5};
    const LiftSpec s = spin_spec(sp);
    const CanonicalPoint start(vec({0.2}), vec({0.5}), 1.0);
    const Deltas d0 = lift_deltas(s, start);
    const Deltas d1 = lift_deltas(s, unflatten_point(run_lift(s, flatten(start), 1.0), 1));
    CHECK(d1.d0 / d0.d0 == doctest::Approx(std::exp(-sp.gamma0)).epsilon(1e-8));
    // dDelta_1/dt = Lambda0 Delta_1 - gamma0 Delta_1.
    CHECK(d1.d(0) / d0.d(0) == doctest::Approx(std::exp(sp.lambda0 - sp.gamma0)).epsilon(1e-8));
  }

  TEST_CASE("spin magnetization stays in (-1, 1) on the submanifold") {
    const LiftSpec s = spin_spec({3.0, 1.0, 2.0});
    IntegratorConfig cfg;
    cfg.output_dt = 0.05;
    const Trajectory tr = integrate(lifted_system(s), flatten(lift_embed(s, vec({-4}))), 0, 10, cfg);
    for (const auto& y : tr.states) CHECK(std::abs(y(1)) < 1.0);
  }

  TEST_CASE("spin certificate") {
    const LiftSpec s = spin_spec({1.0, 1.0, 0.5});
    CHECK(stability_certificate(s, {LinearJacobianClass{-0.5}}).verdict == Verdict::approaches_submanifold);
    const LiftSpec bad = spin_spec({1.0, 0.5, 1.0});
    CHECK(stability_certificate(bad, {LinearJacobianClass{-1.0}}).verdict == Verdict::inconclusive);
  }

  TEST_CASE("Onsager dual flow") {
    Mat L(2, 2);
    L << 2, 0, 0, 0.5;
    const OnsagerParams op = make_onsager(L);
    CHECK((op.M - L.inverse()).cwiseAbs().maxCoeff() < 1e-14);
    const LiftSpec s = onsager_spec(op);
    const Vec x0 = op.L * vec({1, 1});
    const CanonicalPoint e = restricted_exp(s, x0, 1.0);
    CHECK((e.p - vec({1, 1}) / std::exp(1.0)).cwiseAbs().maxCoeff() < 1e-8);
    // L = I, U = psi: same field as the gradient drift towards 0.
    const OnsagerParams id = make_onsager(Mat::Identity(2, 2));
    const DuallyFlatWorkspace ws(potentials::quadratic(Mat::Identity(2, 2)));
    const DriftField g = gradient_drift_psi(ws, vec({0, 0}));
    const LiftSpec os = onsager_spec(id);
    CHECK((os.drift.eval(vec({0.3, -1})) - g.eval(vec({0.3, -1}))).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("Onsager with a shifted potential reaches its minimum") {
    Mat L(2, 2);
    L << 1.0, 0.2, 0.2, 0.6;
    const Vec c = vec({0.5, -0.3});
    const ConvexPotential K = potentials::quadratic(Mat::Identity(2, 2));
    const ScalarField U = make_scalar_field(
        2, [K, c](const Vec& x) { return K.value(Vec(x - c)); }, [K, c](const Vec& x) { return K.gradient(Vec(x - c)); },
        [K](const Vec& x) { return K.hessian(x); });
    const OnsagerParams op = make_onsager(L, U, 5.0);
    const LiftSpec s = onsager_spec(op);
    const CanonicalPoint start(vec({2, 1}), vec({0, 0}), 0.5);
    const CanonicalPoint end = unflatten_point(run_lift(s, flatten(start), 40.0), 2);
    CHECK((end.x - c).cwiseAbs().maxCoeff() < 1e-6);
    const StabilityVerdict v = stability_certificate(s, onsager_query(op, {vec({0, 0}), vec({1, 1})}));
    CHECK(v.verdict == Verdict::approaches_fixed_point);
  }

  TEST_CASE("every model vanishes on its submanifold") {
    std::mt19937_64 rng(31);
    const std::vector<LiftSpec> specs{rc_spec({1.0, 2.0}), rl_spec({1.0, 0.0, 2.0}), rlc_spec({0.5, 1.0, 2.0}),
                                      spin_spec({1.0, 1.0, 0.5}), onsager_spec(make_onsager(Mat::Identity(2, 2)))};
    for (const auto& s : specs) {
      for (int k = 0; k < 10; ++k) {
        const Vec c = testing::uniform(rng, s.dim(), -0.9, 0.9);
        CHECK(std::abs(build_hamiltonian(s)(lift_embed(s, c))) < 1e-15);
      }
    }
  }
}
