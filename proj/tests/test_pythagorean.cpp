#include <doctest.h>

#include "contactflow/pythagorean.hpp"
#include "helpers.hpp"

using namespace cflow;
using testing::vec;

TEST_SUITE("pythagorean") {
  TEST_CASE("euclidean right triangle") {
    const DuallyFlatWorkspace ws(potentials::quadratic(Mat::Identity(2, 2)));
    const Vec a = vec({0, 0}), corner = vec({2, 0}), c = vec({2, 1.5});
    const PythagoreanResult r = pythagorean_check(ws, a, corner, c);
    CHECK(r.residual < 1e-10);
    CHECK(r.d31 == doctest::Approx(0.5 * (4 + 2.25)));
  }

  TEST_CASE("degenerate corner") {
    const DuallyFlatWorkspace ws(potentials::spin_product(2));
    const Vec a = vec({0.3, -0.2}), c = vec({-0.4, 0.8});
    CHECK(pythagorean_residual(ws, a, a, c) < 1e-9);
  }

  TEST_CASE("spin product with a mixed-coordinate corner") {
    const DuallyFlatWorkspace ws(potentials::spin_product(2));
    const Vec x1 = vec({0.4, -0.3}), x3 = vec({-0.5, 0.7});
    const Vec x2 = mixed_corner(ws, x1, x3, {0});
    CHECK(x2(0) == x3(0));
    CHECK(std::abs(ws.p_of(x2)(1) - ws.p_of(x1)(1)) < 1e-12);
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-12;
    cfg.abs_tol = 1e-14;
    const PythagoreanResult r = pythagorean_check(ws, x1, x2, x3, {1e-9, 1e-7, cfg});
    CHECK(r.residual < 1e-8);
    CHECK(r.endpoint_error < 1e-8);
    // The identity fails off the corner.
    CHECK(std::abs(canonical_divergence(ws, x3, x1) - canonical_divergence(ws, x3, x1 * 0.5) -
                   canonical_divergence(ws, x1 * 0.5, x1)) > 1e-3);
  }

  TEST_CASE("residual equals the orthogonality defect") {
    const DuallyFlatWorkspace ws(potentials::spin_product(2));
    const Vec x1 = vec({0.4, -0.3}), x2 = vec({0.1, 0.2}), x3 = vec({-0.5, 0.7});
    const double lhs = canonical_divergence(ws, x3, x1) - canonical_divergence(ws, x3, x2) -
                       canonical_divergence(ws, x2, x1);
    CHECK(std::abs(lhs + (x3 - x2).dot(ws.p_of(x1) - ws.p_of(x2))) < 1e-12);
  }

  TEST_CASE("non-orthogonal configuration is rejected") {
    const DuallyFlatWorkspace ws(potentials::quadratic(Mat::Identity(2, 2)));
    CHECK_THROWS_AS(pythagorean_check(ws, vec({0, 0}), vec({1, 1}), vec({2, 1})), NotPythagorean);
    CHECK_THROWS_AS(mixed_corner(ws, vec({0, 0}), vec({1, 1}), {5}), MalformedInput);
  }
}
