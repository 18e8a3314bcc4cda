#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sail/ode.hpp"
#include "sail/types.hpp"

namespace sail {

/// Unknowns of the two-point boundary-value problem: initial adjoints of the
/// velocity-affecting states plus the free final time.
struct ShootingVariables {
  double lam_r0 = 0.0;
  double lam_u0 = 0.0;
  double lam_v0 = 0.0;
  double tf = 7.0;
};

/// Circular-to-circular planar rendezvous-free transfer: depart from x0,
/// arrive on the circular orbit of radius rf with u = 0, v = 1/sqrt(rf).
struct TransferSpec {
  FlightState x0{1.0, 0.0, 0.0, 1.0};
  double rf = 1.524;

  double v_target() const;
};

struct ShootingOptions {
  /// false integrates the unconstrained steering law (no cone-angle clamp).
  bool clamped = true;
  IntegTol tol{1e-10, 1e-12};
  double newton_tol = 1e-10;  ///< residual infinity-norm for convergence
  /// Looser norm accepted when the damped step stagnates: finite-difference
  /// Jacobians limit how far below the integration error the residual can be
  /// driven, so an iterate the line search can no longer improve counts as
  /// converged once its residual sits under this bound.
  double stall_tol = 1e-8;
  int max_iter = 100;
  /// Trials whose radius leaves (r_floor, escape_radius) are rejected as
  /// infeasible instead of being integrated onward.
  double escape_radius = 10.0;
  double r_floor = 1e-3;
};

/// Terminal defect of one shooting trial:
/// [r(tf) - rf, u(tf), v(tf) - 1/sqrt(rf), H(tf)].
std::array<double, 4> shooting_residual(const ShootingVariables& z, const TransferSpec& spec,
                                        const SailConfig& cfg, const ShootingOptions& opt = {});

struct ShootingResult {
  ShootingVariables z;
  double residual_norm = 0.0;  ///< infinity norm at the returned iterate
  int iterations = 0;
  bool converged = false;
};

/// Damped Newton iteration on the shooting residual with a forward-difference
/// Jacobian and halving line search.
ShootingResult solve_shooting(const TransferSpec& spec, const SailConfig& cfg,
                              const ShootingVariables& guess, const ShootingOptions& opt = {});

struct ContinuationOptions {
  ShootingOptions shooting;
  int n_starts = 64;            ///< random initial guesses for the unconstrained solve
  std::uint64_t seed = 2027;    ///< multistart sampling seed
  int phi_steps = 10;           ///< cone-angle continuation stages
  int max_bisections = 6;       ///< stage-splitting depth when a stage diverges
};

/// Multistart solve of the unconstrained problem (clamp disabled); among the
/// converged trials returns the one with the smallest transfer time.
ShootingResult solve_unconstrained_multistart(const TransferSpec& spec, const SailConfig& cfg,
                                              const ContinuationOptions& opt = {});

/// Full continuation: unconstrained multistart, then the cone-angle bound
/// walked from just below pi/2 down to cfg_target.phi_max, then the smoothing
/// constant walked down when cfg_target.delta sits below the path value.
ShootingResult homotopy_solve(const TransferSpec& spec, const SailConfig& cfg_target,
                              const ContinuationOptions& opt = {});

/// Converged transfer sampled on a uniform time grid.
struct TrajectoryTrace {
  std::vector<double> t;
  std::vector<FlightState> states;
  std::vector<Costate> costates;
  std::vector<double> alpha;
};

TrajectoryTrace trace_transfer(const TransferSpec& spec, const SailConfig& cfg,
                               const ShootingVariables& z, int n_samples, bool clamped = true,
                               const IntegTol& tol = {1e-10, 1e-12});

}  // namespace sail
