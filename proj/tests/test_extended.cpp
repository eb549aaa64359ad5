#include <doctest.h>

#include "contactflow/flows.hpp"
#include "contactflow/models.hpp"
#include "helpers.hpp"

using namespace cflow;
using testing::vec;

namespace {

ExtendedLiftSpec quad_ext(double anchor, Side side = Side::psi) {
  Mat A(2, 2);
  A << -1.0, 0.5, -0.5, -0.3;
  return {LiftSpec{side, potentials::quadratic(Mat::Identity(2, 2)), linear_drift(A), RestoringFunction::linear(1.0)},
          anchor};
}

ExtendedPoint run(const ExtendedLiftSpec& s, const ExtendedPoint& start, double t) {
  return unflatten_state(flow(extended_system(s), flatten_state(start), t), s.dim());
}

}  // namespace

TEST_SUITE("extended") {
  TEST_CASE("anchor must be nonzero") {
    CHECK_THROWS_AS(quad_ext(0.0).validate(), MalformedInput);
    CHECK_NOTHROW(quad_ext(-2.0).validate());
  }

  TEST_CASE("tilde deltas") {
    const ExtendedLiftSpec s = quad_ext(2.0);
    const ExtendedPoint on = embed_extended(s, vec({0.3, -0.4}), 1.5);
    const Deltas d = tilde_deltas(s, on);
    CHECK(d.d0 == 0.0);
    CHECK(d.d.cwiseAbs().maxCoeff() == 0.0);
    CHECK(on.p_extra == 2.0);
    CHECK(on.z == doctest::Approx(0.5 * 0.25 + 2.0 * 1.5));
    // p_extra doubled and p zeroed: Delta~_a = 2 d_a psi - 0.
    ExtendedPoint off = on;
    off.p_extra = 4.0;
    off.p.setZero();
    CHECK((tilde_deltas(s, off).d - 2.0 * vec({0.3, -0.4})).cwiseAbs().maxCoeff() < 1e-15);
    // Hand values: x = (1, 2), x_e = 3, p = (0.5, 0.5), p_e = 1, z = 4, anchor 2.
    ExtendedPoint h{vec({1, 2}), 3.0, vec({0.5, 0.5}), 1.0, 4.0};
    const Deltas dh = tilde_deltas(s, h);
    CHECK(dh.d0 == doctest::Approx(2.5 + 6.0 - 4.0));
    CHECK(dh.d(0) == doctest::Approx(0.5 * 1 - 0.5));
    CHECK(dh.d(1) == doctest::Approx(0.5 * 2 - 0.5));
  }

  TEST_CASE("phi side tilde deltas") {
    const ExtendedLiftSpec s = quad_ext(1.5, Side::phi);
    const ExtendedPoint on = embed_extended(s, vec({0.3, -0.4}), 0.7);
    const Deltas d = tilde_deltas(s, on);
    CHECK(std::abs(d.d0) < 1e-15);
    CHECK(d.d.cwiseAbs().maxCoeff() < 1e-15);
    CHECK(on.x_extra == 1.5);
  }

  TEST_CASE("canonical field matches the written-out components") {
    std::mt19937_64 rng(12);
    for (Side side : {Side::psi, Side::phi}) {
      const ExtendedLiftSpec s = quad_ext(1.7, side);
      for (int k = 0; k < 30; ++k) {
        const ExtendedPoint pt{testing::uniform(rng, 2, -1, 1), testing::uniform(rng, 1, -1, 1)(0),
                               testing::uniform(rng, 2, -1, 1), testing::uniform(rng, 1, 0.5, 2)(0),
                               testing::uniform(rng, 1, -1, 1)(0)};
        CHECK(max_abs_diff(extended_lifted_field(s, pt), extended_lifted_field_termwise(s, pt)) < 1e-10);
      }
    }
  }

  TEST_CASE("restriction consistency") {
    std::mt19937_64 rng(13);
    for (Side side : {Side::psi, Side::phi}) {
      const ExtendedLiftSpec s = quad_ext(1.7, side);
      for (int k = 0; k < 30; ++k) {
        const Vec c = testing::uniform(rng, 2, -1, 1);
        const ExtendedPoint pt = embed_extended(s, c, 0.2);
        CHECK(max_abs_diff(extended_lifted_field(s, pt), restricted_extended_field(s, c)) < 1e-10);
      }
    }
    const ExtendedTangent v = restricted_extended_field(quad_ext(1.7), vec({0.3, 0.1}));
    CHECK(v.dz == 0.0);
    CHECK(v.dp_extra == 0.0);
  }

  TEST_CASE("tilde delta velocities") {
    const ExtendedLiftSpec s = quad_ext(1.7);
    const ExtendedPoint pt{vec({0.2, -0.3}), 0.4, vec({0.5, 0.1}), 2.1, 0.9};
    const TildeDeltaVelocity tv = tilde_delta_velocities(s, pt);
    const ExtendedTangent v = extended_lifted_field(s, pt);
    const double h = 1e-6;
    auto moved = [&](double e) {
      ExtendedPoint q = pt;
      q.x += e * v.dx;
      q.x_extra += e * v.dx_extra;
      q.p += e * v.dp;
      q.p_extra += e * v.dp_extra;
      q.z += e * v.dz;
      return tilde_deltas(s, q);
    };
    const Deltas a = moved(-h), b = moved(h);
    CHECK(std::abs((b.d0 - a.d0) / (2 * h) - tv.d_delta0) < 1e-7);
    CHECK(((b.d - a.d) / (2 * h) - tv.d_delta).cwiseAbs().maxCoeff() < 1e-7);
  }

  TEST_CASE("conservation, decay and compressibility") {
    const ExtendedLiftSpec s = quad_ext(1.7);
    const ExtendedPoint start{vec({0.2, -0.3}), 0.4, vec({0.5, 0.1}), 2.1, 0.9};
    const ExtendedPoint end = run(s, start, 1.0);
    CHECK(std::abs(generating_value(s, end) - generating_value(s, start)) < 1e-9);
    const ContactHamiltonian h = extended_hamiltonian(s);
    const double h0 = h(flatten_extended(start)), h1 = h(flatten_extended(end));
    CHECK(std::abs(h1 - h0 / std::exp(1.0)) < 1e-9);
    const ExtendedLiftSpec one{LiftSpec{Side::psi, potentials::log_cosh(), linear_drift(-Mat::Identity(1, 1)),
                                        RestoringFunction::linear(1.0)},
                               1.0};
    const ExtendedPoint q{vec({0.3}), 0.1, vec({0.2}), 1.4, 0.5};
    CHECK(phase_compressibility(extended_hamiltonian(one), flatten_extended(q)) == doctest::Approx(-3.0));
  }

  TEST_CASE("extended invariant density") {
    const ExtendedLiftSpec s{LiftSpec{Side::psi, potentials::quadratic(Mat::Identity(1, 1)),
                                      linear_drift(-Mat::Identity(1, 1)), RestoringFunction::linear(1.0)},
                             1.0};
    // On x = 0, p = 0, p_e = anchor: h~ = Delta~0 = x_e - z.
    ExtendedPoint pt{vec({0}), 0.0, vec({0}), 1.0, -2.0};
    CHECK(extended_hamiltonian(s)(flatten_extended(pt)) == doctest::Approx(2.0));
    CHECK(extended_invariant_density(s, pt) == doctest::Approx(0.125));
    pt.z = 3.0;
    CHECK_THROWS_AS(extended_invariant_density(s, pt), OutsideInvariantChart);
    pt.z = -2.0;
    const ExtendedPoint a = run(s, pt, 0.5), b = run(s, pt, 0.8);
    CHECK(extended_invariant_density(s, b) / extended_invariant_density(s, a) ==
          doctest::Approx(std::exp(3 * 0.3)).epsilon(1e-8));
    const double eps = 1e-5;
    const double fm = extended_invariant_density(s, run(s, pt, 0.5 - eps)),
                 fp = extended_invariant_density(s, run(s, pt, 0.5 + eps));
    const double kappa = -3.0;
    CHECK(std::abs((fp - fm) / (2 * eps) + kappa * extended_invariant_density(s, a)) < 1e-6);
  }

  TEST_CASE("entropy bookkeeping for circuits") {
    const ExtendedLiftSpec rc = rc_thermal_spec({1.0, 1.0, 0.0, 1.0});
    const ExtendedTangent v = restricted_extended_field(rc, vec({1}));
    CHECK(v.dx(0) == -1.0);
    CHECK(v.dp(0) == -1.0);
    CHECK(v.dx_extra == 1.0);
    CHECK(v.dz == 0.0);
    // Dissipative drift (J - R) grad psi with R SPD and anchor > 0.
    const ConvexPotential psi = potentials::spin_product(2);
    Mat JR(2, 2);
    JR << -0.5, 1.0, -1.0, -0.8;
    const ExtendedLiftSpec d{
        LiftSpec{Side::psi, psi, make_drift(2, [psi, JR](const Vec& x) { return Vec(JR * psi.gradient(x)); }),
                 RestoringFunction::linear(1.0)},
        2.0};
    std::mt19937_64 rng(21);
    for (int k = 0; k < 20; ++k) {
      const Vec x = testing::uniform(rng, 2, -2, 2);
      const ExtendedTangent w = restricted_extended_field(d, x);
      CHECK(w.dx_extra > 0.0);
      CHECK(std::abs(2.0 * w.dx_extra + psi.gradient(x).dot(w.dx)) < 1e-12);
    }
    const ExtendedLiftSpec zero{LiftSpec{Side::psi, psi, linear_drift(Mat::Zero(2, 2)), RestoringFunction::linear(1)}, 1.0};
    const ExtendedTangent z = restricted_extended_field(zero, vec({0.1, 0.2}));
    CHECK(z.dx.cwiseAbs().maxCoeff() == 0.0);
    CHECK(z.dx_extra == 0.0);
  }

  TEST_CASE("no dually flat workspace for psi tilde") {
    CHECK_THROWS_AS(extended_workspace(quad_ext(1.0)), NotDuallyFlat);
    const ConvexPotential e = extended_potential(quad_ext(2.0));
    CHECK(e.n == 3);
  }
}
