#pragma once

#include "sail/types.hpp"

namespace sail {

/// Interior stationary points of the Hamiltonian in the cone angle. Both lie
/// in (-pi/2, pi/2); alpha_min minimizes, alpha_max maximizes.
struct StationaryRoots {
  double alpha_max = 0.0;
  double alpha_min = 0.0;
};

/// Solves dH/dalpha = 0 for lam_v != 0. For lam_v = 0 (and lam_u < 0) the
/// minimizer degenerates to alpha = 0, which is what the returned alpha_min
/// reports; alpha_max then degenerates to +-pi/2 and is reported as such.
StationaryRoots stationary_roots(double lam_u, double lam_v);

/// Unconstrained minimizer of the Hamiltonian over the cone angle, evaluated
/// in a cancellation-free form in both half-planes of (lam_u, lam_v).
double alpha_bar(double lam_u, double lam_v);

/// Cone-angle-dependent part of the Hamiltonian,
/// (beta / r^2) (lam_u cos^3 a + lam_v sin a cos^2 a).
double control_hamiltonian(double alpha, double lam_u, double lam_v, double r, double beta);

/// Second derivative of the Hamiltonian with respect to the cone angle.
double control_hamiltonian_hessian(double alpha, double lam_u, double lam_v, double r,
                                   double beta);

/// Minimum-time command with hard cone-angle clamp. When lam_v = 0 and
/// lam_u > 0 the minimizer sits at +-phi_max with equal cost; prev_alpha
/// breaks the tie by keeping the side flown so far.
double optimal_alpha(double lam_u, double lam_v, double phi_max, double prev_alpha = 0.0);

/// Smooth saturation of the unconstrained command:
/// 0.5 * (sqrt((a + phi_max)^2 + delta) - sqrt((a - phi_max)^2 + delta)).
/// delta = 0 recovers the hard clamp exactly.
double smoothed_alpha(double alpha_unconstrained, double phi_max, double delta);

/// How far the smoothed law can exceed a hard clamp evaluated at the knee;
/// returned as a magnitude, 0 for delta = 0.
double smoothing_slack(double phi_max, double delta);

/// Largest command magnitude the smoothed law is allowed to emit.
double command_bound(double phi_max, double delta);

/// Saturated guidance command for the given adjoints: smoothed_alpha applied
/// to alpha_bar. With clamped = false returns raw alpha_bar (the
/// unconstrained-steering comparison case).
double flown_alpha(double lam_u, double lam_v, const SailConfig& cfg, bool clamped = true);

/// True when the command jumps between the two saturation rails: lam_v
/// changes sign while lam_u > 0. A sign change with lam_u < 0 is a smooth
/// pass through zero, not a jump.
bool jump_condition(double lam_u, double lam_v_before, double lam_v_after);

/// Undoes the pre-jump sign flip of a stored command: a network trained on
/// sign-normalized commands emits alpha_pre, and the flown command is
/// -alpha_pre while alpha_pre and lam_v share a sign, alpha_pre otherwise.
double revert_alpha(double alpha_pre, double lam_v);

/// One dataset command sample.
struct GuidanceCommand {
  double alpha = 0.0;      ///< command actually flown
  double alpha_pre = 0.0;  ///< sign-normalized training target
  bool jump_flag = false;  ///< sample lies before the command jump
};

}  // namespace sail
