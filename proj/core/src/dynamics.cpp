#include "sail/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace sail {

void SailConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("SailConfig: beta must be positive and finite");
  }
  if (!(phi_max > 0.0) || !(phi_max < std::numbers::pi / 2.0)) {
    throw std::invalid_argument("SailConfig: phi_max must lie in (0, pi/2)");
  }
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("SailConfig: delta must be >= 0 and finite");
  }
}

double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(theta, two_pi);
  if (w < 0.0) w += two_pi;
  return w;
}

SrpAccel srp_acceleration(double r, double alpha, double beta) {
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  const double c2 = c * c;
  const double scale = beta / (r * r);
  return {scale * c2 * c, scale * s * c2};
}

FlightState dynamics_rhs(const FlightState& x, double alpha, double beta) {
  const double r2 = x.r * x.r;
  const SrpAccel a = srp_acceleration(x.r, alpha, beta);
  FlightState d;
  d.r = x.u;
  d.theta = x.v / x.r;
  d.u = a.a_u + x.v * x.v / x.r - 1.0 / r2;
  d.v = a.a_v - x.u * x.v / x.r;
  return d;
}

Costate costate_rhs(const FlightState& x, const Costate& lam, double alpha, double beta) {
  const double r = x.r;
  const double r2 = r * r;
  const double r3 = r2 * r;
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  const double c2 = c * c;
  Costate d;
  d.lam_r = lam.lam_theta * x.v / r2 +
            lam.lam_u * (2.0 * beta * c2 * c / r3 + x.v * x.v / r2 - 2.0 / r3) +
            lam.lam_v * (2.0 * beta * s * c2 / r3 - x.u * x.v / r2);
  d.lam_theta = 0.0;
  d.lam_u = -lam.lam_r + lam.lam_v * x.v / r;
  d.lam_v = -lam.lam_theta / r - 2.0 * lam.lam_u * x.v / r + lam.lam_v * x.u / r;
  return d;
}

double hamiltonian(const FlightState& x, const Costate& lam, double alpha, double beta) {
  const FlightState d = dynamics_rhs(x, alpha, beta);
  return 1.0 + lam.lam_r * d.r + lam.lam_theta * d.theta + lam.lam_u * d.u + lam.lam_v * d.v;
}

std::vector<BubbleSample> force_bubble_grid(double beta_lo, double beta_hi, int n_beta,
                                            double phi_max, int n_alpha) {
  if (n_beta < 1 || n_alpha < 2) {
    throw std::invalid_argument("force_bubble_grid: need n_beta >= 1 and n_alpha >= 2");
  }
  std::vector<BubbleSample> out;
  out.reserve(static_cast<std::size_t>(n_beta) * static_cast<std::size_t>(n_alpha));
  for (int ib = 0; ib < n_beta; ++ib) {
    const double beta =
        n_beta == 1 ? beta_lo : beta_lo + (beta_hi - beta_lo) * ib / (n_beta - 1.0);
    for (int ia = 0; ia < n_alpha; ++ia) {
      const double alpha = -phi_max + 2.0 * phi_max * ia / (n_alpha - 1.0);
      const SrpAccel a = srp_acceleration(1.0, alpha, beta);
      out.push_back({beta, alpha, a.a_u, a.a_v});
    }
  }
  return out;
}

}  // namespace sail
