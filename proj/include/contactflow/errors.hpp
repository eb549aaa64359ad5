#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cflow {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad dimensions, non-finite entries, invalid parameters.
struct MalformedInput : Error {
  using Error::Error;
};

// A callable produced a non-finite value.
struct EvaluationError : Error {
  using Error::Error;
};

// Two independent evaluations of the same quantity disagree.
struct DiagnosticError : Error {
  using Error::Error;
};

// Hessian failed Cholesky.
struct ConvexityError : Error {
  using Error::Error;
};

struct NonConvergence : Error {
  NonConvergence(const std::string& what, Eigen::VectorXd best, double residual, int iterations)
      : Error(what), best(std::move(best)), residual(residual), iterations(iterations) {}
  Eigen::VectorXd best;
  double residual;
  int iterations;
};

struct NotPythagorean : Error {
  using Error::Error;
};

// h <= 0 where the density h^{-k} is requested.
struct OutsideInvariantChart : Error {
  using Error::Error;
};

// The extended generating function has a degenerate Hessian and admits no metric.
struct NotDuallyFlat : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(const std::string& what, int line, std::string field)
      : Error(what), line(line), field(std::move(field)) {}
  int line;
  std::string field;
};

// Integration hit a NaN or the adaptive step floor.
struct NumericalAbort : Error {
  using Error::Error;
};

}  // namespace cflow
