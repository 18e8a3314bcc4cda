#pragma once

#include <cmath>
#include <numbers>

namespace sail {

// Canonical heliocentric units: distances in AU, times in TU chosen so that
// the gravitational parameter of the Sun is 1 (one circular orbit at 1 AU has
// speed 1 and period 2*pi).
namespace units {
inline constexpr double au_m = 1.4959965e11;      // metres per AU
inline constexpr double tu_s = 5.0226757e6;       // seconds per TU
inline constexpr double speed_ms = au_m / tu_s;   // m/s per AU/TU
}  // namespace units

/// Planar flight state of the sail in polar coordinates.
struct FlightState {
  double r = 1.0;      ///< radial distance [AU], > 0
  double theta = 0.0;  ///< phase angle [rad]
  double u = 0.0;      ///< radial velocity [AU/TU]
  double v = 1.0;      ///< transverse velocity [AU/TU]
};

/// Adjoint variables paired with FlightState. lam_theta is conserved and is
/// identically zero on the transfers handled here (theta(tf) free).
struct Costate {
  double lam_r = 0.0;
  double lam_theta = 0.0;
  double lam_u = 0.0;
  double lam_v = 0.0;
};

struct StateCostate {
  FlightState state;
  Costate costate;
};

/// Sail performance and steering-law parameters.
struct SailConfig {
  /// Characteristic acceleration over solar gravity at 1 AU.
  double beta = 0.16892;
  /// Cone-angle bound [rad]; commands are confined to [-phi_max, phi_max].
  double phi_max = std::numbers::pi / 3.0;
  /// Saturation smoothing constant; 0 recovers the hard clamp.
  double delta = 1e-3;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Wraps an angle into [0, 2*pi).
double wrap_angle(double theta);

}  // namespace sail
