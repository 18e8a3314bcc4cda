#include "sail/factory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sail/dynamics.hpp"
#include "sail/guidance.hpp"

namespace sail {

namespace {

enum : std::size_t { iR = 0, iU, iV, iLr, iLu, iLv, kDim };

OdeRhs make_backward_rhs(const SailConfig& cfg) {
  return [cfg](double, std::span<const double> y, std::span<double> dy) {
    const BackwardState s{y[iR], y[iU], y[iV], y[iLr], y[iLu], y[iLv]};
    const BackwardState d = backward_rhs(s, cfg);
    dy[iR] = d.R;
    dy[iU] = d.U;
    dy[iV] = d.V;
    dy[iLr] = d.lam_R;
    dy[iLu] = d.lam_U;
    dy[iLv] = d.lam_V;
  };
}

}  // namespace

BackwardState backward_rhs(const BackwardState& y, const SailConfig& cfg) {
  const double alpha = flown_alpha(y.lam_U, y.lam_V, cfg);
  const FlightState x{y.R, 0.0, y.U, y.V};
  const Costate lam{y.lam_R, 0.0, y.lam_U, y.lam_V};
  const FlightState dx = dynamics_rhs(x, alpha, cfg.beta);
  const Costate dl = costate_rhs(x, lam, alpha, cfg.beta);
  return {-dx.r, -dx.u, -dx.v, -dl.lam_r, -dl.lam_u, -dl.lam_v};
}

double solve_lambda_v0(double lam_u0, double r0, const SailConfig& cfg) {
  // Residual of the free-final-time condition on the target circular orbit,
  // where U = 0 and the gravity/centrifugal terms cancel exactly.
  const auto g = [&](double lam_v0) {
    const double alpha = flown_alpha(lam_u0, lam_v0, cfg);
    const SrpAccel a = srp_acceleration(r0, alpha, cfg.beta);
    return 1.0 + lam_u0 * a.a_u + lam_v0 * a.a_v;
  };

  // Descending scan from just below zero; the physically meaningful root is
  // the one closest to the orbit-tangent condition.
  constexpr int kScan = 4000;
  constexpr double lo = -200.0;
  double prev_x = -1e-9;
  double prev_g = g(prev_x);
  for (int i = 1; i <= kScan; ++i) {
    const double x = lo * static_cast<double>(i) / kScan;
    const double gx = g(x);
    if (gx == 0.0) return x;
    if ((gx > 0.0) != (prev_g > 0.0)) {
      // Bisection to machine-level residual.
      double a = prev_x, b = x, ga = prev_g;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        const double gm = g(m);
        if (std::abs(gm) <= 1e-13 || 0.5 * std::abs(b - a) < 1e-15) return m;
        if ((gm > 0.0) == (ga > 0.0)) {
          a = m;
          ga = gm;
        } else {
          b = m;
        }
      }
      return 0.5 * (a + b);
    }
    prev_x = x;
    prev_g = gx;
  }
  throw NoRootError("solve_lambda_v0: no sign change in [-200, 0) for lam_u0 = " +
                    std::to_string(lam_u0));
}

OptimalTrajectory propagate_parameterized(double lam_r0, double lam_u0, double r0,
                                          double tf_max, const SailConfig& cfg,
                                          const PropagateOptions& opt) {
  OptimalTrajectory traj;
  traj.lam_r0_seed = lam_r0;
  traj.lam_u0_seed = lam_u0;
  traj.lam_v0 = solve_lambda_v0(lam_u0, r0, cfg);

  const std::array<double, kDim> y0{r0,     0.0,    1.0 / std::sqrt(r0),
                                    lam_r0, lam_u0, traj.lam_v0};
  const OdeGuard guard = [&opt](double, std::span<const double> y) {
    return y[iR] > opt.r_floor && y[iR] < opt.r_ceil;
  };
  // Command jumps (transverse-adjoint sign changes crossed with positive
  // radial-velocity adjoint) flip the steering rail, so the integration is
  // restarted at each of them; crossings with lam_U < 0 are smooth zero
  // passes of the command and do not split the flow.
  const SwitchedFlow flow =
      integrate_switched(make_backward_rhs(cfg), y0, 0.0, tf_max, iLv, iLu, opt.tol, guard);
  traj.degraded = flow.degraded();
  traj.n_jumps = static_cast<int>(flow.switch_times().size());
  if (traj.n_jumps == 1) traj.tau_jump = flow.switch_times().front();

  for (const DenseSolution& leg : flow.legs()) {
    for (std::size_t i = 0; i <= leg.n_steps(); ++i) {
      traj.max_radius = std::max(traj.max_radius, leg.node(i)[iR]);
    }
  }

  const int n = std::max(1, static_cast<int>(std::llround(tf_max / opt.dtau)));
  std::vector<double> buf(kDim);
  traj.tau.reserve(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double tau = tf_max * k / n;
    flow.sample(tau, buf);
    traj.tau.push_back(tau);
    traj.states.push_back({buf[iR], 0.0, buf[iU], buf[iV]});
    traj.costates.push_back({buf[iLr], 0.0, buf[iLu], buf[iLv]});
    traj.alpha.push_back(flown_alpha(buf[iLu], buf[iLv], cfg));
  }
  traj.alpha_pre = traj.alpha;
  return traj;
}

OptimalTrajectory preprocess_alpha(const OptimalTrajectory& traj) {
  OptimalTrajectory out = traj;
  if (out.tau_jump) {
    for (std::size_t k = 0; k < out.tau.size(); ++k) {
      if (out.tau[k] > *out.tau_jump) out.alpha_pre[k] = -out.alpha[k];
    }
  }
  out.preprocessed = true;
  return out;
}

Dataset generate_dataset(double lam_rf, double lam_uf, const SailConfig& cfg,
                         const DatasetOptions& opt) {
  if (opt.n_lam_r < 2 || opt.n_lam_u < 2) {
    throw std::invalid_argument("generate_dataset: seed grid needs at least 2x2 points");
  }
  cfg.validate();

  Dataset ds;
  ds.stats.n_seeds = opt.n_lam_r * opt.n_lam_u;

  for (int i = 0; i < opt.n_lam_r; ++i) {
    const double d_lam_r = opt.d_lam_r_range[0] +
                           (opt.d_lam_r_range[1] - opt.d_lam_r_range[0]) * i /
                               (opt.n_lam_r - 1.0);
    for (int j = 0; j < opt.n_lam_u; ++j) {
      const double d_lam_u = opt.d_lam_u_range[0] +
                             (opt.d_lam_u_range[1] - opt.d_lam_u_range[0]) * j /
                                 (opt.n_lam_u - 1.0);
      OptimalTrajectory traj;
      try {
        traj = propagate_parameterized(lam_rf + d_lam_r, lam_uf + d_lam_u, opt.r0,
                                       opt.tf_max, cfg, opt.propagate);
      } catch (const NoRootError&) {
        ++ds.stats.n_rejected_infeasible;
        continue;
      } catch (const IntegrationError&) {
        ++ds.stats.n_rejected_infeasible;
        continue;
      }
      if (traj.degraded) {
        // A steering flip could not be isolated (near-tangential crossing);
        // the command labels past it would be unreliable.
        ++ds.stats.n_rejected_infeasible;
        continue;
      }
      if (traj.max_radius > opt.radius_filter) {
        ++ds.stats.n_rejected_radius;
        continue;
      }
      if (traj.n_jumps > 1) {
        ++ds.stats.n_rejected_multijump;
        continue;
      }
      traj.id = static_cast<std::uint32_t>(ds.trajectories.size());
      OptimalTrajectory prepped = preprocess_alpha(traj);
      if (prepped.tau_jump) ++ds.stats.n_jump_trajectories;
      ++ds.stats.n_accepted;

      for (std::size_t k = 0; k < prepped.tau.size(); ++k) {
        DatasetRecord rec;
        rec.r = prepped.states[k].r;
        rec.u = prepped.states[k].u;
        rec.v = prepped.states[k].v;
        rec.tf = prepped.tau[k];
        rec.alpha = prepped.alpha[k];
        rec.alpha_pre = prepped.alpha_pre[k];
        rec.lam_v = prepped.costates[k].lam_v;
        rec.traj_id = prepped.id;
        rec.jump_flag = prepped.tau_jump && prepped.tau[k] > *prepped.tau_jump;
        ds.records.push_back(rec);
      }
      ds.trajectories.push_back(std::move(prepped));
    }
  }
  ds.stats.n_records = ds.records.size();
  return ds;
}

double round_trip_error(const OptimalTrajectory& traj, const SailConfig& cfg,
                        const IntegTol& tol) {
  const std::size_t last = traj.tau.size() - 1;
  const std::array<double, kDim> y_far{traj.states[last].r,    traj.states[last].u,
                                       traj.states[last].v,    traj.costates[last].lam_r,
                                       traj.costates[last].lam_u, traj.costates[last].lam_v};
  const OdeRhs forward = [&cfg](double, std::span<const double> y, std::span<double> dy) {
    const BackwardState s{y[iR], y[iU], y[iV], y[iLr], y[iLu], y[iLv]};
    const BackwardState d = backward_rhs(s, cfg);
    dy[iR] = -d.R;
    dy[iU] = -d.U;
    dy[iV] = -d.V;
    dy[iLr] = -d.lam_R;
    dy[iLu] = -d.lam_U;
    dy[iLv] = -d.lam_V;
  };
  const SwitchedFlow sol = integrate_switched(forward, y_far, 0.0, traj.duration(), iLv, iLu, tol);
  const auto yf = sol.terminal();

  const std::array<double, kDim> y_start{traj.states[0].r,       traj.states[0].u,
                                         traj.states[0].v,       traj.costates[0].lam_r,
                                         traj.costates[0].lam_u, traj.costates[0].lam_v};
  double err = 0.0;
  for (std::size_t i = 0; i < kDim; ++i) err = std::max(err, std::abs(yf[i] - y_start[i]));
  return err;
}

}  // namespace sail
