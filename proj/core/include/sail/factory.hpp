#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sail/ode.hpp"
#include "sail/types.hpp"

namespace sail {

/// State of the reversed-time extremal flow, parameterized by remaining
/// flight time tau = tf - t. Phase angle and its adjoint are dropped: the
/// former decouples, the latter is identically zero.
struct BackwardState {
  double R = 0.0;
  double U = 0.0;
  double V = 0.0;
  double lam_R = 0.0;
  double lam_U = 0.0;
  double lam_V = 0.0;
};

/// d/dtau of the reversed extremal flow (sign-flipped forward dynamics), with
/// the command evaluated from the adjoints by the saturated steering law.
BackwardState backward_rhs(const BackwardState& y, const SailConfig& cfg);

struct NoRootError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Initial transverse adjoint on the target circular orbit: the negative root
/// of the stationarity of the Hamiltonian at tau = 0,
///   1 + lam_U0 a_u(alpha) + lam_V0 a_v(alpha) = 0,  alpha = alpha(lam_U0, lam_V0),
/// located by a descending sign scan over [-200, 0) plus bisection. Throws
/// NoRootError when the scan finds no sign change.
double solve_lambda_v0(double lam_u0, double r0, const SailConfig& cfg);

/// One member of the family of time-optimal arcs that end on the target
/// circular orbit, sampled on a fixed tau grid. Every prefix tau in [0, T]
/// is itself a time-optimal transfer with remaining flight time tau.
struct OptimalTrajectory {
  std::uint32_t id = 0;
  double lam_r0_seed = 0.0;  ///< lam_R at tau = 0
  double lam_u0_seed = 0.0;  ///< lam_U at tau = 0
  double lam_v0 = 0.0;       ///< lam_V at tau = 0, from solve_lambda_v0

  std::vector<double> tau;            ///< ascending, tau[0] = 0
  std::vector<FlightState> states;    ///< theta carried as 0
  std::vector<Costate> costates;      ///< lam_theta = 0
  std::vector<double> alpha;          ///< command flown at each node
  std::vector<double> alpha_pre;      ///< sign-normalized command (see preprocess_alpha)

  /// Remaining flight time of the command jump, when exactly one occurred.
  std::optional<double> tau_jump;
  int n_jumps = 0;       ///< rail-to-rail command jumps found on (0, T)
  double max_radius = 0.0;  ///< largest R over the integration mesh
  /// A command jump could not be isolated cleanly; node data past it is
  /// unreliable and the arc should not be used for training.
  bool degraded = false;
  bool preprocessed = false;

  double duration() const { return tau.back(); }
};

struct PropagateOptions {
  /// Tight by default: the backward->forward consistency check below has to
  /// close to 1e-6 per component over a 10 TU arc, which needs roughly two
  /// orders of margin in the local tolerance.
  IntegTol tol{1e-13, 1e-14};
  double dtau = 10.0 / 350.0;  ///< sampling interval of the tau grid
  double r_floor = 0.05;       ///< domain guard; leaving it marks the arc infeasible
  double r_ceil = 10.0;
};

/// Integrates the reversed flow from the target orbit with seed adjoints
/// (lam_r0, lam_u0), samples it on the tau grid, evaluates commands, and
/// locates command jumps on the continuous solution. alpha_pre is left equal
/// to alpha; apply preprocess_alpha for the training form.
OptimalTrajectory propagate_parameterized(double lam_r0, double lam_u0, double r0,
                                          double tf_max, const SailConfig& cfg,
                                          const PropagateOptions& opt = {});

/// Returns the trajectory with the pre-jump command sign removed: nodes with
/// tau > tau_jump hold alpha_pre = -alpha, all others alpha_pre = alpha.
/// revert_alpha undoes the flip from (alpha_pre, lam_v) alone.
OptimalTrajectory preprocess_alpha(const OptimalTrajectory& traj);

/// One training sample: flight state with remaining time, the command pair,
/// the transverse adjoint, and bookkeeping for grouping and the jump side.
struct DatasetRecord {
  double r = 0.0;
  double u = 0.0;
  double v = 0.0;
  double tf = 0.0;  ///< remaining flight time
  double alpha = 0.0;
  double alpha_pre = 0.0;
  double lam_v = 0.0;
  std::uint32_t traj_id = 0;
  bool jump_flag = false;  ///< node lies on the sign-flipped (pre-jump) segment
};

struct DatasetOptions {
  int n_lam_r = 60;  ///< seed-grid resolution in the radial-adjoint offset
  int n_lam_u = 60;  ///< seed-grid resolution in the u-adjoint offset
  std::array<double, 2> d_lam_r_range{-20.0, 23.0};
  std::array<double, 2> d_lam_u_range{5.0, 11.0};
  double r0 = 1.524;        ///< target-orbit radius the arcs emanate from
  double tf_max = 10.0;     ///< length of each backward arc
  double radius_filter = 1.54;  ///< discard arcs that ever exceed this radius
  PropagateOptions propagate;
};

struct DatasetStats {
  int n_seeds = 0;
  int n_accepted = 0;
  int n_rejected_radius = 0;
  int n_rejected_multijump = 0;
  int n_rejected_infeasible = 0;
  int n_jump_trajectories = 0;
  std::size_t n_records = 0;
};

struct Dataset {
  std::vector<OptimalTrajectory> trajectories;  ///< accepted, preprocessed
  std::vector<DatasetRecord> records;
  DatasetStats stats;
};

/// Sweeps the seed grid centered on the nominal terminal adjoints
/// (lam_rf, lam_uf), keeps the feasible single-jump arcs that stay inside the
/// radius filter, preprocesses their commands, and flattens them into
/// records. Deterministic for fixed inputs.
Dataset generate_dataset(double lam_rf, double lam_uf, const SailConfig& cfg,
                         const DatasetOptions& opt = {});

/// Largest |state - state| mismatch (all six components) between a backward
/// arc's start and the forward re-integration from its far end; a
/// consistency diagnostic for the reversed flow.
double round_trip_error(const OptimalTrajectory& traj, const SailConfig& cfg,
                        const IntegTol& tol = {1e-13, 1e-14});

}  // namespace sail
