#pragma once

#include <vector>

#include "sail/types.hpp"

namespace sail {

/// Radial/transverse components of the sail thrust acceleration.
struct SrpAccel {
  double a_u = 0.0;
  double a_v = 0.0;
};

/// Ideal-sail radiation-pressure acceleration at distance r and cone angle
/// alpha: a_u = beta cos^3(alpha) / r^2, a_v = beta sin(alpha) cos^2(alpha) / r^2.
SrpAccel srp_acceleration(double r, double alpha, double beta);

/// Time derivative of the flight state under gravity plus sail thrust.
/// The returned struct carries rates (rdot, thetadot, udot, vdot).
FlightState dynamics_rhs(const FlightState& x, double alpha, double beta);

/// Adjoint dynamics for the minimum-time problem. The lam_theta component is
/// identically zero and stays zero.
Costate costate_rhs(const FlightState& x, const Costate& lam, double alpha, double beta);

/// Minimum-time Hamiltonian, 1 + lam . f(x, alpha); identically zero along an
/// optimal transfer with free final time.
double hamiltonian(const FlightState& x, const Costate& lam, double alpha, double beta);

/// One point of the reachable-acceleration locus at 1 AU.
struct BubbleSample {
  double beta = 0.0;
  double alpha = 0.0;  ///< cone angle [rad]
  double a_u = 0.0;
  double a_v = 0.0;
};

/// Samples the thrust-acceleration locus at r = 1 AU over alpha in
/// [-phi_max, phi_max] for n_beta lightness numbers spanning
/// [beta_lo, beta_hi] (inclusive), n_alpha points per curve.
std::vector<BubbleSample> force_bubble_grid(double beta_lo, double beta_hi, int n_beta,
                                            double phi_max, int n_alpha);

}  // namespace sail
