#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "contactflow/geometry.hpp"

namespace cflow {

struct Box {
  Vec lo;
  Vec hi;
  bool contains(const Vec& x) const;
  Vec center() const { return 0.5 * (lo + hi); }
};

// Smooth scalar function with first and second derivatives.
struct ScalarField {
  int n = 0;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
  std::string name;
};

// Missing derivatives are filled in by central differences.
ScalarField make_scalar_field(int n, std::function<double(const Vec&)> value,
                              std::function<Vec(const Vec&)> gradient = {},
                              std::function<Mat(const Vec&)> hessian = {}, std::string name = {});

// A strictly convex ScalarField. Strictness is checked by Cholesky wherever
// the Hessian is used to solve or invert.
struct ConvexPotential : ScalarField {
  std::optional<Box> domain;
};

ConvexPotential make_potential(int n, std::function<double(const Vec&)> value,
                               std::function<Vec(const Vec&)> gradient = {},
                               std::function<Mat(const Vec&)> hessian = {}, std::string name = {},
                               std::optional<Box> domain = std::nullopt);

// Throws ConvexityError unless H is symmetric positive definite.
void require_spd(const Mat& H, const char* context);

namespace potentials {

// 0.5 x^T M x with M SPD.
ConvexPotential quadratic(const Mat& M);
// ln cosh(x) + ln 2, n = 1.
ConvexPotential log_cosh();
// Sum of one-dimensional potentials, one per coordinate.
ConvexPotential separable(const std::vector<ConvexPotential>& parts);
// sum_i ln cosh(x_i) + n ln 2.
ConvexPotential spin_product(int n);

}  // namespace potentials

}  // namespace cflow
