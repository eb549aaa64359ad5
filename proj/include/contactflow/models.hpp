#pragma once

#include <optional>

#include "contactflow/extended.hpp"

namespace cflow {

// Series circuit parameters in normalized units. T0 = 0 selects the plain
// model. A user potential replaces the linear capacitor/inductor energy.
struct CircuitParams {
  double R = 1.0;
  double C = 0.0;
  double L = 0.0;
  double T0 = 0.0;
  double gamma0 = 1.0;  // restoring rate of the lift
  std::optional<ConvexPotential> potential;
};

// RC: psi(Q) = Q^2/(2C), F(Q) = -Q/(RC); p = V, z = H_C.
LiftSpec rc_spec(const CircuitParams& params);
// Anchor T0, extra coordinate S, psi~ = H_C + T0 S.
ExtendedLiftSpec rc_thermal_spec(const CircuitParams& params);

// RL on the phi side: phi(I) = L I^2/2, F(I) = -(R/L) I; x = N.
LiftSpec rl_spec(const CircuitParams& params);
// Thermal RL on the psi side: psi(N) = N^2/(2L), F(N) = -(R/L) N.
ExtendedLiftSpec rl_thermal_spec(const CircuitParams& params);

// RLC on the phi side in (V, I): phi = C V^2/2 + L I^2/2,
// F = (I/C, -V/L - R I/L). R = 0 gives the lossless LC oscillator.
LiftSpec rlc_spec(const CircuitParams& params);
// Thermal RLC on the psi side in (Q, N): psi = Q^2/(2C) + N^2/(2L),
// F = (N/L, -Q/C - R N/L).
ExtendedLiftSpec rlc_thermal_spec(const CircuitParams& params);

struct SpinParams {
  double theta = 0.0;  // normalized field
  double gamma0 = 1.0;
  double lambda0 = 0.0;
};

// psi = ln cosh x + ln 2, F = -lambda0 (x - theta), Gamma = gamma0 Delta_0.
LiftSpec spin_spec(const SpinParams& params);

struct OnsagerParams {
  Mat L;                          // SPD Onsager coefficients
  Mat M;                          // inverse of L
  std::optional<ScalarField> U;   // defaults to psi = x^T M x / 2
  double gamma0 = 1.0;
};

OnsagerParams make_onsager(const Mat& L, std::optional<ScalarField> U = std::nullopt, double gamma0 = 1.0);

// psi = x^T M x / 2 and F = -L grad U.
LiftSpec onsager_spec(const OnsagerParams& params);
StabilityQuery onsager_query(const OnsagerParams& params, std::vector<Vec> samples);

// n = 2 rotational drift (omega x2, -omega x1) on a given psi.
LiftSpec oscillatory_spec(const ConvexPotential& psi, double omega, double gamma0);

}  // namespace cflow
