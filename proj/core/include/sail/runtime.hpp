#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "sail/mlp.hpp"
#include "sail/ode.hpp"
#include "sail/shooting.hpp"
#include "sail/types.hpp"

namespace sail {

/// The three regressors of the onboard guidance: remaining flight time from
/// (r, u, v), and the sign-normalized command plus transverse adjoint from
/// (r, u, v, tf).
struct GuidanceStack {
  MlpModel n_tf;
  MlpModel n_alpha_pre;
  MlpModel n_lam_v;

  /// Throws std::invalid_argument when the input widths are not 3/4/4 or an
  /// output width is not 1.
  void validate() const;
};

/// One guidance evaluation: predict the remaining time, predict the
/// sign-normalized command and the adjoint that decides its sign, undo the
/// sign normalization, and clamp to the command bound.
struct GuidanceOutput {
  double alpha = 0.0;      ///< command to fly [rad]
  double tf_pred = 0.0;    ///< predicted remaining flight time [TU]
  double alpha_pre = 0.0;  ///< raw sign-normalized command prediction
  double lam_v = 0.0;      ///< predicted transverse adjoint
};

GuidanceOutput guidance_step(const GuidanceStack& stack, const FlightState& x,
                             const SailConfig& cfg);

/// Multiplicative actuation disturbance: the effective lightness number is
/// resampled uniformly in beta * (1 +- amplitude) at the start of every
/// control interval.
struct PerturbationSpec {
  /// Relative amplitude, e.g. 0.15 for +-15%. Must lie in [0, 1) so the
  /// effective lightness number stays positive; closed_loop rejects the rest.
  double beta_noise = 0.0;
  std::uint64_t seed = 99;
};

/// Defect against the target circular orbit, componentwise absolute.
struct FlightError {
  double d_r = 0.0;
  double d_u = 0.0;
  double d_v = 0.0;

  double max_component() const;
};

FlightError flight_error(const FlightState& xf, double rf);

struct SimOptions {
  double control_dt = 0.01;  ///< zero-order-hold interval [TU]
  double stop_tf = 0.01;     ///< stop once the predicted remaining time drops below this
  double t_cap = 15.0;       ///< hard wall-clock cap [TU]
  std::array<double, 2> r_guard{0.5, 3.0};  ///< divergence band for the radius
  IntegTol tol{1e-10, 1e-12};
};

struct SimStep {
  double t = 0.0;
  FlightState x;
  double alpha = 0.0;
  double tf_pred = 0.0;
  double beta_eff = 0.0;
};

struct SimResult {
  std::vector<SimStep> steps;  ///< one row per flown control interval, taken at its start
  FlightState final_state;
  FlightError error;
  double elapsed = 0.0;    ///< flight time actually flown [TU]
  bool converged = false;  ///< stopped on the predicted-time criterion
  bool diverged = false;   ///< radius left the guard band
  double max_abs_alpha = 0.0;  ///< largest |command| over the flight
};

/// Closed-loop flight under the network guidance with zero-order-hold
/// commands. Commands are clamped to command_bound(cfg); the plant may carry
/// a perturbed lightness number while guidance always assumes the nominal one.
SimResult closed_loop(const GuidanceStack& stack, const FlightState& x0,
                      const TransferSpec& spec, const SailConfig& cfg,
                      const PerturbationSpec& noise = {}, const SimOptions& opt = {});

/// Guidance law as a plain function of elapsed time and current state.
/// Lets reference laws fly through the exact same plant as the network stack:
/// a resampled indirect solution isolates simulator error from network error,
/// and ablation variants reuse the loop unchanged.
using GuidanceFn = std::function<GuidanceOutput(double t, const FlightState& x)>;

SimResult closed_loop(const GuidanceFn& guidance, const FlightState& x0,
                      const TransferSpec& spec, const SailConfig& cfg,
                      const PerturbationSpec& noise = {}, const SimOptions& opt = {});

/// Sampling box for departure states.
struct StateBox {
  std::array<double, 2> r{1.0, 1.15};
  std::array<double, 2> theta{0.0, 2.0 * std::numbers::pi};
  std::array<double, 2> u{0.0, 0.1};
  std::array<double, 2> v{0.8, 1.2};
};

struct GeneralizationOptions {
  int n_trials = 30;
  std::uint64_t seed = 4242;
  double success_tol = 1e-2;  ///< per-component terminal-error threshold
  StateBox box;
  SimOptions sim;
};

struct GeneralizationTrial {
  FlightState x0;
  FlightError error;
  double elapsed = 0.0;
  bool converged = false;
  bool diverged = false;
  bool success = false;
};

struct GeneralizationReport {
  std::vector<GeneralizationTrial> trials;
  int n_success = 0;
  double success_rate = 0.0;
};

/// Flies random departures drawn from the box and scores each flight against
/// the per-component terminal tolerance.
GeneralizationReport generalization_suite(const GuidanceStack& stack, const TransferSpec& spec,
                                          const SailConfig& cfg,
                                          const GeneralizationOptions& opt = {});

struct TimingReport {
  int n_calls = 0;
  double mean_us = 0.0;
  double min_us = 0.0;
  double max_us = 0.0;
};

/// Wall-clock latency of guidance_step over n random in-box states.
TimingReport time_guidance(const GuidanceStack& stack, const SailConfig& cfg, int n_calls,
                           std::uint64_t seed = 17);

}  // namespace sail
