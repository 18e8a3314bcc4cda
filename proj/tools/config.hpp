#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "sail/factory.hpp"
#include "sail/runtime.hpp"
#include "sail/shooting.hpp"
#include "sail/train.hpp"
#include "sail/types.hpp"

namespace sail::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Everything a run needs, with every stochastic stage owning an explicit
/// seed. Defaults reproduce the reference setup; a config file overrides
/// individual keys.
struct RunConfig {
  SailConfig sail;
  TransferSpec transfer;                      ///< departure case 1 + target
  FlightState x0_case2{1.05, 0.0, 0.15, 1.03};
  FlightState x0_robust{1.1, std::numbers::pi / 2.0, 0.18, 0.93};

  DatasetOptions dataset;
  /// Desk-scale training recipe. A 3000-row deterministic subsample of the
  /// full seed grid reaches ~1e-6 normalized validation MSE on the
  /// remaining-time target within the epoch budget. The patience window is
  /// deliberately wide: the returned weights are the best-validation snapshot
  /// either way, and a tight window halts the slow damped-Gauss-Newton
  /// descent hundreds of epochs short of its floor.
  TrainHyper train = [] {
    TrainHyper t;
    t.max_samples = 3000;
    t.patience = 200;
    return t;
  }();

  // Continuation / multistart.
  int n_starts = 64;
  int phi_steps = 10;

  // Closed loop.
  SimOptions sim;
  double noise_amplitude = 0.15;
  GeneralizationOptions gen;

  // Stage seeds.
  std::uint64_t seed_multistart = 2027;
  std::uint64_t seed_train_tf = 101;
  std::uint64_t seed_train_alpha_pre = 202;
  std::uint64_t seed_train_lam_v = 303;
  std::uint64_t seed_noise = 99;
  std::uint64_t seed_generalization = 4242;
  std::uint64_t seed_timing = 17;

  std::string out_dir = "out";
  int trace_samples = 1400;
};

/// Parses `key = value` lines ('#' starts a comment; keys are dotted paths).
/// Unknown keys or malformed values throw ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig parse_config_file(const std::string& path);

/// Deterministic full serialization of a config (every key, fixed order,
/// exact float formatting). Equal configs serialize to equal bytes.
std::string canonical_config(const RunConfig& cfg);

/// FNV-1a hash of the canonical serialization; stamped into artifacts.
std::string config_hash(const RunConfig& cfg);

}  // namespace sail::cli
