#include <doctest.h>

#include "contactflow/flows.hpp"
#include "contactflow/models.hpp"
#include "helpers.hpp"

using namespace cflow;
using testing::vec;

namespace {

const System decay = [](const Vec& y) -> Vec { return -y; };

double rk4_error(double step) {
  IntegratorConfig c;
  c.method = Method::rk4;
  c.step = step;
  return std::abs(flow(decay, vec({1}), 1.0, c)(0) - std::exp(-1.0));
}

}  // namespace

TEST_SUITE("integrate") {
  TEST_CASE("rk4 closed form and order") {
    IntegratorConfig c;
    c.method = Method::rk4;
    c.step = 1e-3;
    const LiftSpec rc = rc_spec({1.0, 1.0});
    const Vec y = flow(lifted_system(rc), flatten(lift_embed(rc, vec({1}))), 1.0, c);
    CHECK(std::abs(y(0) - std::exp(-1.0)) < 1e-9);
    const double ratio = rk4_error(0.1) / rk4_error(0.05);
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
  }

  TEST_CASE("rkf45 respects its tolerance") {
    for (double rel : {1e-6, 1e-8, 1e-10}) {
      IntegratorConfig c;
      c.rel_tol = rel;
      c.abs_tol = rel * 1e-2;
      const double err = std::abs(flow(decay, vec({1}), 1.0, c)(0) - std::exp(-1.0));
      CHECK(err <= 10 * rel);
    }
  }

  TEST_CASE("semigroup property") {
    const LiftSpec s = spin_spec({1.0, 1.0, 0.5});
    const System f = lifted_system(s);
    const Vec y0 = flatten(CanonicalPoint(vec({0.2}), vec({0.5}), 1.0));
    const Vec a = flow(f, flow(f, y0, 0.3), 0.7), b = flow(f, y0, 1.0);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-8);
  }

  TEST_CASE("recording") {
    IntegratorConfig c;
    c.output_dt = 0.25;
    const Trajectory tr = integrate(decay, vec({1}), 0.0, 1.0, c, {"y2"},
                                    [](double, const Vec& y) { return std::vector<double>{y(0) * y(0)}; });
    REQUIRE(tr.times.size() == 5);
    CHECK(tr.times[2] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(tr.times.back() == 1.0);
    CHECK(tr.diagnostics[4][0] == doctest::Approx(std::exp(-2.0)).epsilon(1e-9));
    for (size_t k = 1; k < tr.times.size(); ++k) CHECK(tr.times[k] > tr.times[k - 1]);
    const Trajectory all = integrate(decay, vec({1}), 0.0, 1.0);
    CHECK(all.accepted + 1 == static_cast<long>(all.times.size()));
  }

  TEST_CASE("bad configuration") {
    IntegratorConfig c;
    c.step = -1;
    CHECK_THROWS_AS(integrate(decay, vec({1}), 0, 1, c), MalformedInput);
    CHECK_THROWS_AS(integrate(decay, vec({1}), 1, 0), MalformedInput);
    CHECK_THROWS_AS(integrate(decay, vec({NAN}), 0, 1), MalformedInput);
  }

  TEST_CASE("blow-up aborts with the last good state") {
    const System blow = [](const Vec& y) -> Vec { return y.cwiseProduct(y) * 1e3; };
    IntegratorConfig c;
    c.method = Method::rk4;
    c.step = 1e-2;
    const Trajectory tr = integrate(blow, vec({1}), 0, 1, c);
    CHECK(tr.status == TrajectoryStatus::aborted);
    CHECK(std::isfinite(tr.final_state()(0)));
    CHECK_THROWS_AS(flow(blow, vec({1}), 1, c), NumericalAbort);
  }

  TEST_CASE("step floor truncates") {
    const System stiff = [](const Vec& y) -> Vec { return y.cwiseProduct(y); };
    IntegratorConfig c;
    c.min_step = 1e-6;
    const Trajectory tr = integrate(stiff, vec({1}), 0, 2, c);
    CHECK(tr.status == TrajectoryStatus::truncated);
    CHECK(tr.final_time() < 1.0);
    CHECK_FALSE(tr.message.empty());
  }
}
