#include "sail/shooting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "sail/dynamics.hpp"
#include "sail/guidance.hpp"
#include "sail/rng.hpp"

namespace sail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Augmented state layout used by the shooting integrations.
enum : std::size_t { iR = 0, iTheta, iU, iV, iLr, iLth, iLu, iLv, kDim };

FlightState unpack_state(std::span<const double> y) {
  return {y[iR], y[iTheta], y[iU], y[iV]};
}

Costate unpack_costate(std::span<const double> y) {
  return {y[iLr], y[iLth], y[iLu], y[iLv]};
}

OdeRhs make_rhs(const SailConfig& cfg, bool clamped) {
  return [cfg, clamped](double, std::span<const double> y, std::span<double> dy) {
    const FlightState x = unpack_state(y);
    const Costate lam = unpack_costate(y);
    const double alpha = flown_alpha(lam.lam_u, lam.lam_v, cfg, clamped);
    const FlightState dx = dynamics_rhs(x, alpha, cfg.beta);
    const Costate dl = costate_rhs(x, lam, alpha, cfg.beta);
    dy[iR] = dx.r;
    dy[iTheta] = dx.theta;
    dy[iU] = dx.u;
    dy[iV] = dx.v;
    dy[iLr] = dl.lam_r;
    dy[iLth] = dl.lam_theta;
    dy[iLu] = dl.lam_u;
    dy[iLv] = dl.lam_v;
  };
}

std::array<double, kDim> pack_initial(const TransferSpec& spec, const ShootingVariables& z) {
  return {spec.x0.r, spec.x0.theta, spec.x0.u, spec.x0.v, z.lam_r0, 0.0, z.lam_u0, z.lam_v0};
}

// The steering law flips rail sign when lam_v crosses zero while lam_u > 0,
// making the right-hand side discontinuous in time there; the shooting
// integrations restart at those flips (integrate_switched) so the residual
// stays a smooth function of the unknowns. The adjoint rates carry no direct
// steering dependence, which is exactly the slope-continuity requirement of
// integrate_switched.
SwitchedFlow integrate_legs(const SailConfig& cfg, bool clamped,
                            const std::array<double, kDim>& y0, double tf, const IntegTol& tol,
                            const OdeGuard& guard) {
  return integrate_switched(make_rhs(cfg, clamped), y0, 0.0, tf, iLv, iLu, tol, guard);
}

double inf_norm(const std::array<double, 4>& v) {
  return std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2]), std::abs(v[3])});
}

// Residual that reports +inf (rather than throwing) for infeasible trials so
// the line search can treat them as rejected points.
std::array<double, 4> try_residual(const ShootingVariables& z, const TransferSpec& spec,
                                   const SailConfig& cfg, const ShootingOptions& opt) {
  if (!(z.tf > 0.01) || !std::isfinite(z.tf)) return {kInf, kInf, kInf, kInf};
  try {
    return shooting_residual(z, spec, cfg, opt);
  } catch (const IntegrationError&) {
    return {kInf, kInf, kInf, kInf};
  }
}

ShootingVariables step_scaled(const ShootingVariables& z, const Eigen::Vector4d& d, double s) {
  return {z.lam_r0 + s * d[0], z.lam_u0 + s * d[1], z.lam_v0 + s * d[2], z.tf + s * d[3]};
}

}  // namespace

double TransferSpec::v_target() const { return 1.0 / std::sqrt(rf); }

std::array<double, 4> shooting_residual(const ShootingVariables& z, const TransferSpec& spec,
                                        const SailConfig& cfg, const ShootingOptions& opt) {
  const auto y0 = pack_initial(spec, z);
  const OdeGuard guard = [&opt](double, std::span<const double> y) {
    return y[iR] > opt.r_floor && y[iR] < opt.escape_radius;
  };
  const SwitchedFlow flow = integrate_legs(cfg, opt.clamped, y0, z.tf, opt.tol, guard);
  const auto yf = flow.terminal();
  const FlightState xf = unpack_state(yf);
  const Costate lf = unpack_costate(yf);
  const double alpha_f = flown_alpha(lf.lam_u, lf.lam_v, cfg, opt.clamped);
  return {xf.r - spec.rf, xf.u, xf.v - spec.v_target(),
          hamiltonian(xf, lf, alpha_f, cfg.beta)};
}

ShootingResult solve_shooting(const TransferSpec& spec, const SailConfig& cfg,
                              const ShootingVariables& guess, const ShootingOptions& opt) {
  ShootingVariables z = guess;
  std::array<double, 4> F = try_residual(z, spec, cfg, opt);
  double fnorm = inf_norm(F);

  ShootingResult result{z, fnorm, 0, false};
  if (!std::isfinite(fnorm)) return result;

  for (int iter = 1; iter <= opt.max_iter; ++iter) {
    if (fnorm <= opt.newton_tol) {
      result = {z, fnorm, iter - 1, true};
      return result;
    }

    // Forward-difference Jacobian, one residual per unknown.
    Eigen::Matrix4d J;
    const std::array<double, 4> base{z.lam_r0, z.lam_u0, z.lam_v0, z.tf};
    bool jac_ok = true;
    for (int j = 0; j < 4 && jac_ok; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(base[j]));
      ShootingVariables zp = z;
      (j == 0   ? zp.lam_r0
       : j == 1 ? zp.lam_u0
       : j == 2 ? zp.lam_v0
                : zp.tf) += h;
      const auto Fp = try_residual(zp, spec, cfg, opt);
      for (int i = 0; i < 4; ++i) {
        const double d = (Fp[i] - F[i]) / h;
        if (!std::isfinite(d)) jac_ok = false;
        J(i, j) = d;
      }
    }
    if (!jac_ok) break;

    const Eigen::Vector4d rhs(-F[0], -F[1], -F[2], -F[3]);
    Eigen::FullPivLU<Eigen::Matrix4d> lu(J);
    if (!lu.isInvertible()) break;
    const Eigen::Vector4d dz = lu.solve(rhs);
    if (!dz.allFinite()) break;

    // Halving line search on the residual norm.
    double s = 1.0;
    ShootingVariables z_new = z;
    std::array<double, 4> F_new = F;
    double fnorm_new = fnorm;
    bool improved = false;
    while (s >= 1.0 / 1024.0) {
      const ShootingVariables zt = step_scaled(z, dz, s);
      const auto Ft = try_residual(zt, spec, cfg, opt);
      const double ft = inf_norm(Ft);
      if (ft < fnorm) {
        z_new = zt;
        F_new = Ft;
        fnorm_new = ft;
        improved = true;
        break;
      }
      s *= 0.5;
    }
    if (!improved) {
      result = {z, fnorm, iter, fnorm <= opt.stall_tol};
      return result;
    }
    z = z_new;
    F = F_new;
    fnorm = fnorm_new;
    result = {z, fnorm, iter, fnorm <= opt.newton_tol};
  }
  result.converged = fnorm <= opt.newton_tol;
  result.z = z;
  result.residual_norm = fnorm;
  return result;
}

ShootingResult solve_unconstrained_multistart(const TransferSpec& spec, const SailConfig& cfg,
                                              const ContinuationOptions& opt) {
  ShootingOptions sopt = opt.shooting;
  sopt.clamped = false;
  Rng rng(opt.seed);
  ShootingResult best;
  best.residual_norm = kInf;
  for (int trial = 0; trial < opt.n_starts; ++trial) {
    ShootingVariables guess;
    guess.lam_r0 = rng.uniform(-40.0, 40.0);
    guess.lam_u0 = rng.uniform(-40.0, 40.0);
    guess.lam_v0 = rng.uniform(-40.0, 40.0);
    guess.tf = rng.uniform(5.0, 10.0);
    const ShootingResult res = solve_shooting(spec, cfg, guess, sopt);
    if (res.converged && (!best.converged || res.z.tf < best.z.tf)) best = res;
  }
  return best;
}

namespace {

// Corrector solve with deterministic restart offsets.  When the extremal is
// about to develop an interior steering switch, the warm start can sit inside
// the finite-difference shadow of the kink, where Jacobian columns mix both
// sides and the first Newton direction is useless; a relative offset of 1e-4
// to 1e-3 moves the first iterate off the shadow without leaving the basin.
ShootingResult solve_stage(const TransferSpec& spec, const SailConfig& cfg,
                           const ShootingVariables& z, const ShootingOptions& sopt) {
  ShootingResult res = solve_shooting(spec, cfg, z, sopt);
  if (res.converged) return res;
  static constexpr double kOffsets[] = {1e-4, -1e-4, 1e-3, -1e-3};
  for (const double s : kOffsets) {
    ShootingVariables j = z;
    j.lam_r0 *= 1.0 + s;
    j.lam_u0 *= 1.0 - s;
    j.lam_v0 *= 1.0 + s;
    j.tf *= 1.0 + s;
    const ShootingResult retry = solve_shooting(spec, cfg, j, sopt);
    if (retry.converged) return retry;
    if (retry.residual_norm < res.residual_norm) res = retry;
  }
  return res;
}

// One continuation stage from a warm start, splitting the parameter step in
// half (up to a depth limit) whenever the Newton iteration fails.
bool continue_stage(const TransferSpec& spec, SailConfig cfg_from, const SailConfig& cfg_to,
                    ShootingVariables& z, const ShootingOptions& sopt, int depth_left) {
  const ShootingResult res = solve_stage(spec, cfg_to, z, sopt);
  if (res.converged) {
    z = res.z;
    return true;
  }
  if (depth_left <= 0) return false;
  SailConfig mid = cfg_to;
  mid.phi_max = 0.5 * (cfg_from.phi_max + cfg_to.phi_max);
  mid.delta = 0.5 * (cfg_from.delta + cfg_to.delta);
  if (!continue_stage(spec, cfg_from, mid, z, sopt, depth_left - 1)) return false;
  return continue_stage(spec, mid, cfg_to, z, sopt, depth_left - 1);
}

}  // namespace

ShootingResult homotopy_solve(const TransferSpec& spec, const SailConfig& cfg_target,
                              const ContinuationOptions& opt) {
  cfg_target.validate();
  const ShootingResult unconstrained = solve_unconstrained_multistart(spec, cfg_target, opt);
  if (!unconstrained.converged) return unconstrained;

  ShootingOptions sopt = opt.shooting;
  sopt.clamped = true;
  // Intermediate stages only have to track the solution branch well enough to
  // warm-start the next stage.  Where the interior steering switch is being
  // born the crossing is nearly tangential and residual evaluations are noisy
  // at the 1e-6..1e-4 level no matter how the switch is handled, so stages
  // accept stalled iterates at a looser norm; the closing solve at the exact
  // target configuration below is still held to the strict tolerances.
  ShootingOptions sopt_stage = sopt;
  sopt_stage.stall_tol = std::max(sopt.stall_tol, 1e-4);
  ShootingVariables z = unconstrained.z;

  // Walk the cone-angle bound down from just below a flat sail; the smoothing
  // constant is kept no smaller than 1e-3 along this leg so that the command
  // field stays differentiable while the bound moves.
  const double phi_start = std::numbers::pi / 2.0 - 1e-3;
  const double delta_path = std::max(cfg_target.delta, 1e-3);
  SailConfig cfg_prev = cfg_target;
  cfg_prev.phi_max = phi_start;
  cfg_prev.delta = delta_path;
  {
    const ShootingResult first = solve_stage(spec, cfg_prev, z, sopt_stage);
    if (!first.converged) return first;
    z = first.z;
  }
  for (int i = 1; i <= opt.phi_steps; ++i) {
    SailConfig cfg_i = cfg_prev;
    cfg_i.phi_max = phi_start + (cfg_target.phi_max - phi_start) * i / opt.phi_steps;
    if (!continue_stage(spec, cfg_prev, cfg_i, z, sopt_stage, opt.max_bisections)) {
      return {z, inf_norm(try_residual(z, spec, cfg_target, sopt)), 0, false};
    }
    cfg_prev = cfg_i;
  }

  // Smoothing-constant tail for targets sharper than the path value.
  if (cfg_target.delta < delta_path) {
    std::vector<double> ladder;
    for (double d = delta_path * 0.1; d > cfg_target.delta && d > 1e-7; d *= 0.1) {
      ladder.push_back(d);
    }
    ladder.push_back(cfg_target.delta);
    for (const double d : ladder) {
      SailConfig cfg_i = cfg_prev;
      cfg_i.delta = d;
      if (!continue_stage(spec, cfg_prev, cfg_i, z, sopt_stage, opt.max_bisections)) {
        return {z, inf_norm(try_residual(z, spec, cfg_target, sopt)), 0, false};
      }
      cfg_prev = cfg_i;
    }
  }

  ShootingResult final = solve_stage(spec, cfg_target, z, sopt);
  return final;
}

TrajectoryTrace trace_transfer(const TransferSpec& spec, const SailConfig& cfg,
                               const ShootingVariables& z, int n_samples, bool clamped,
                               const IntegTol& tol) {
  if (n_samples < 1) throw std::invalid_argument("trace_transfer: n_samples must be >= 1");
  const auto y0 = pack_initial(spec, z);
  const SwitchedFlow flow = integrate_legs(cfg, clamped, y0, z.tf, tol, {});
  TrajectoryTrace trace;
  trace.t.reserve(n_samples + 1);
  std::vector<double> buf(kDim);
  for (int i = 0; i <= n_samples; ++i) {
    const double t = z.tf * i / n_samples;
    flow.sample(t, buf);
    trace.t.push_back(t);
    trace.states.push_back(unpack_state(buf));
    trace.costates.push_back(unpack_costate(buf));
    trace.alpha.push_back(flown_alpha(buf[iLu], buf[iLv], cfg, clamped));
  }
  return trace;
}

}  // namespace sail
