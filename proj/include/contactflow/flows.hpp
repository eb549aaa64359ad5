#pragma once

#include <string>
#include <vector>

#include "contactflow/extended.hpp"
#include "contactflow/integrate.hpp"

namespace cflow {

// Flat-state vector fields. Lifts use (x, p, z); extended lifts use
// (x, x_extra, p, p_extra, z).
System lifted_system(const LiftSpec& spec);
System restricted_system(const LiftSpec& spec);
System extended_system(const ExtendedLiftSpec& spec);
System restricted_extended_system(const ExtendedLiftSpec& spec);

struct DiagnosticSet {
  std::vector<std::string> names;
  Diagnostics fn;
};

// h, delta0, delta_norm, kappa.
DiagnosticSet lift_diagnostics(const LiftSpec& spec);
// h, delta0, delta_norm, kappa, psi_tilde (phi_tilde on the phi side), and
// H_tot, S when thermal is set.
DiagnosticSet extended_diagnostics(const ExtendedLiftSpec& spec, bool thermal);

// Unit-time (or time t) exponential map of the restricted field, started on
// the embedded submanifold at the chart coordinate.
CanonicalPoint restricted_exp(const LiftSpec& spec, const Vec& chart, double t = 1.0,
                              const IntegratorConfig& cfg = {});

}  // namespace cflow
