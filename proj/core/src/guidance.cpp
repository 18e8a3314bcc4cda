#include "sail/guidance.hpp"

#include <algorithm>
#include <cmath>

namespace sail {

namespace {

constexpr double pi_2 = std::numbers::pi / 2.0;

// Discriminant sqrt of the stationarity quadratic in tan(alpha).
double stat_sqrt(double lam_u, double lam_v) {
  return std::sqrt(9.0 * lam_u * lam_u + 8.0 * lam_v * lam_v);
}

}  // namespace

double alpha_bar(double lam_u, double lam_v) {
  if (lam_v == 0.0) {
    // lam_u < 0: cos^3 profile, minimized at zero cone angle. lam_u >= 0:
    // the interior minimizer escapes to a rail; take the limit from the
    // lam_v side we sit on (signed zero aware) so the value stays bounded.
    if (lam_u < 0.0) return 0.0;
    return -std::copysign(pi_2, lam_v);
  }
  const double s = stat_sqrt(lam_u, lam_v);
  // Two algebraically equal forms of tan(alpha); each avoids the subtractive
  // cancellation the other suffers when lam_v -> 0 in its half-plane.
  const double t = lam_u >= 0.0 ? (-3.0 * lam_u - s) / (4.0 * lam_v)
                                : -2.0 * lam_v / (-3.0 * lam_u + s);
  return std::atan(t);
}

StationaryRoots stationary_roots(double lam_u, double lam_v) {
  StationaryRoots roots;
  if (lam_v == 0.0) {
    if (lam_u < 0.0) {
      roots.alpha_min = 0.0;
      roots.alpha_max = pi_2;
    } else if (lam_u > 0.0) {
      roots.alpha_min = pi_2;
      roots.alpha_max = 0.0;
    }
    return roots;
  }
  const double s = stat_sqrt(lam_u, lam_v);
  roots.alpha_min = alpha_bar(lam_u, lam_v);
  const double t_max = lam_u <= 0.0 ? (-3.0 * lam_u + s) / (4.0 * lam_v)
                                    : 2.0 * lam_v / (3.0 * lam_u + s);
  roots.alpha_max = std::atan(t_max);
  return roots;
}

double control_hamiltonian(double alpha, double lam_u, double lam_v, double r, double beta) {
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  const double c2 = c * c;
  return beta / (r * r) * (lam_u * c2 * c + lam_v * s * c2);
}

double control_hamiltonian_hessian(double alpha, double lam_u, double lam_v, double r,
                                   double beta) {
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  const double c2 = c * c;
  const double s2 = s * s;
  return beta / (r * r) *
         (-3.0 * lam_u * (c2 * c - 2.0 * c * s2) + lam_v * (2.0 * s2 * s - 7.0 * s * c2));
}

double optimal_alpha(double lam_u, double lam_v, double phi_max, double prev_alpha) {
  if (lam_v == 0.0) {
    if (lam_u < 0.0) return 0.0;
    if (lam_u == 0.0) return 0.0;  // Hamiltonian flat in alpha; keep neutral
    // Both rails minimize with equal cost; stay on the side flown so far.
    return prev_alpha < 0.0 ? -phi_max : phi_max;
  }
  return std::clamp(alpha_bar(lam_u, lam_v), -phi_max, phi_max);
}

double smoothed_alpha(double alpha_unconstrained, double phi_max, double delta) {
  const double p = alpha_unconstrained + phi_max;
  const double m = alpha_unconstrained - phi_max;
  return 0.5 * (std::sqrt(p * p + delta) - std::sqrt(m * m + delta));
}

double smoothing_slack(double phi_max, double delta) {
  // Gap between the hard clamp and the smoothed law at the knee
  // |alpha| = phi_max, reported as a magnitude.
  return phi_max - 0.5 * (std::sqrt(4.0 * phi_max * phi_max + delta) - std::sqrt(delta));
}

double command_bound(double phi_max, double delta) {
  return phi_max + smoothing_slack(phi_max, delta);
}

double flown_alpha(double lam_u, double lam_v, const SailConfig& cfg, bool clamped) {
  const double a = alpha_bar(lam_u, lam_v);
  return clamped ? smoothed_alpha(a, cfg.phi_max, cfg.delta) : a;
}

bool jump_condition(double lam_u, double lam_v_before, double lam_v_after) {
  return lam_u > 0.0 && lam_v_before * lam_v_after < 0.0;
}

double revert_alpha(double alpha_pre, double lam_v) {
  return alpha_pre * lam_v > 0.0 ? -alpha_pre : alpha_pre;
}

}  // namespace sail
