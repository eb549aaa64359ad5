#pragma once

#include <vector>

#include "contactflow/flows.hpp"

namespace cflow {

struct PythagoreanOptions {
  double orthogonality_tol = 1e-9;  // relative to |x3 - x2| |p1 - p2|
  double endpoint_tol = 1e-7;       // flow endpoints against the supplied points
  IntegratorConfig integrator{};
};

struct PythagoreanResult {
  double residual = 0.0;  // |D(3||1) - D(3||2) - D(2||1)|
  double d31 = 0.0, d32 = 0.0, d21 = 0.0;
  double orthogonality = 0.0;  // (x3 - x2).(p1 - p2)
  double endpoint_error = 0.0;
  Vec x2_flow;  // end of the unit-time psi-geodesic from xi1
  Vec x3_flow;  // end of the unit-time phi-geodesic from xi2
};

// Points are given by their x coordinates: xi1 = xi', xi2 = xi'' (the corner),
// xi3 = xi'''. xi1 -> xi2 is followed by the geodesic that is straight in p,
// xi2 -> xi3 by the one straight in x, both as unit-time exponential maps of
// restricted lifts. The divergences are evaluated at the flowed points.
// Throws NotPythagorean if the corner is not orthogonal or the flows miss.
PythagoreanResult pythagorean_check(const DuallyFlatWorkspace& ws, const Vec& x1, const Vec& x2, const Vec& x3,
                                    const PythagoreanOptions& opts = {});

double pythagorean_residual(const DuallyFlatWorkspace& ws, const Vec& x1, const Vec& x2, const Vec& x3,
                            const PythagoreanOptions& opts = {});

// Corner xi'' with x_i = x3_i for i in from_third and p_j = p1_j otherwise.
// Orthogonality holds by construction for any psi.
Vec mixed_corner(const DuallyFlatWorkspace& ws, const Vec& x1, const Vec& x3, const std::vector<int>& from_third);

}  // namespace cflow
