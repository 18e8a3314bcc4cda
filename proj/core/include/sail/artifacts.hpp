#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sail/dynamics.hpp"
#include "sail/factory.hpp"
#include "sail/runtime.hpp"
#include "sail/shooting.hpp"

namespace sail {

/// Shortest exact decimal form of a double (printf %.17g trimmed by value);
/// fixed across platforms for the IEEE doubles we emit.
std::string format_g17(double x);

/// FNV-1a 64-bit hash as a 16-digit lowercase hex string.
std::string fnv1a_hex(std::string_view bytes);

/// Column scalings applied on output; canonical() emits AU/TU quantities
/// unchanged, si() converts lengths, times, speeds, and accelerations.
struct UnitScales {
  double time = 1.0;
  double length = 1.0;
  double speed = 1.0;
  double accel = 1.0;

  static UnitScales canonical() { return {}; }
  static UnitScales si();
};

/// CSV with header t,r,theta,u,v,lam_r,lam_u,lam_v,alpha. Adjoints are always
/// reported in canonical units.
std::string trace_csv(const TrajectoryTrace& trace, const UnitScales& units = {});

/// CSV with header r,u,v,tf,alpha,alpha_pre,lam_v,traj_id,jump_flag,
/// canonical units, one row per record in stored order.
std::string dataset_csv(const std::vector<DatasetRecord>& records);

/// Inverse of dataset_csv; throws std::runtime_error on malformed input.
std::vector<DatasetRecord> parse_dataset_csv(const std::string& text);

/// CSV with header beta,alpha_rad,a_u,a_v.
std::string bubble_csv(const std::vector<BubbleSample>& samples, const UnitScales& units = {});

/// CSV with header t,r,theta,u,v,alpha,tf_pred,beta_eff: one row per control
/// interval plus a terminal row carrying the last held command.
std::string sim_csv(const SimResult& result, const UnitScales& units = {});

/// JSON manifest for a generated dataset: schema version, configuration hash,
/// generation parameters, acceptance/rejection counts, and the content hash
/// of the dataset CSV.
std::string dataset_manifest_json(const DatasetStats& stats, const DatasetOptions& opt,
                                  const SailConfig& cfg, double lam_rf, double lam_uf,
                                  std::string_view config_hash, std::string_view csv_hash);

void write_file(const std::string& path, std::string_view content);
std::string read_file(const std::string& path);

}  // namespace sail
