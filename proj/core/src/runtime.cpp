#include "sail/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sail/dynamics.hpp"
#include "sail/guidance.hpp"
#include "sail/rng.hpp"

namespace sail {

void GuidanceStack::validate() const {
  n_tf.validate();
  n_alpha_pre.validate();
  n_lam_v.validate();
  if (n_tf.input_dim() != 3 || n_alpha_pre.input_dim() != 4 || n_lam_v.input_dim() != 4) {
    throw std::invalid_argument("GuidanceStack: expected input widths 3 (tf) and 4 (others)");
  }
  if (n_tf.output_dim() != 1 || n_alpha_pre.output_dim() != 1 || n_lam_v.output_dim() != 1) {
    throw std::invalid_argument("GuidanceStack: all networks must be scalar-valued");
  }
}

double FlightError::max_component() const { return std::max({d_r, d_u, d_v}); }

FlightError flight_error(const FlightState& xf, double rf) {
  return {std::abs(xf.r - rf), std::abs(xf.u), std::abs(xf.v - 1.0 / std::sqrt(rf))};
}

GuidanceOutput guidance_step(const GuidanceStack& stack, const FlightState& x,
                             const SailConfig& cfg) {
  GuidanceOutput out;
  const std::array<double, 3> in3{x.r, x.u, x.v};
  out.tf_pred = stack.n_tf.forward(in3);
  const std::array<double, 4> in4{x.r, x.u, x.v, out.tf_pred};
  out.alpha_pre = stack.n_alpha_pre.forward(in4);
  out.lam_v = stack.n_lam_v.forward(in4);
  const double bound = command_bound(cfg.phi_max, cfg.delta);
  out.alpha = std::clamp(revert_alpha(out.alpha_pre, out.lam_v), -bound, bound);
  return out;
}

SimResult closed_loop(const GuidanceStack& stack, const FlightState& x0,
                      const TransferSpec& spec, const SailConfig& cfg,
                      const PerturbationSpec& noise, const SimOptions& opt) {
  return closed_loop(
      [&stack, &cfg](double, const FlightState& x) { return guidance_step(stack, x, cfg); },
      x0, spec, cfg, noise, opt);
}

SimResult closed_loop(const GuidanceFn& guidance, const FlightState& x0,
                      const TransferSpec& spec, const SailConfig& cfg,
                      const PerturbationSpec& noise, const SimOptions& opt) {
  if (!(noise.beta_noise >= 0.0 && noise.beta_noise < 1.0)) {
    throw std::invalid_argument("closed_loop: beta_noise must lie in [0, 1)");
  }
  SimResult res;
  Rng rng(noise.seed);
  FlightState x = x0;
  double t = 0.0;

  // Plant state for one hold interval: (r, theta, u, v) under a frozen
  // command and effective lightness number.
  const auto fly_interval = [&](double alpha, double beta_eff, double dt) {
    const OdeRhs rhs = [alpha, beta_eff](double, std::span<const double> y,
                                         std::span<double> dy) {
      const FlightState s{y[0], y[1], y[2], y[3]};
      const FlightState d = dynamics_rhs(s, alpha, beta_eff);
      dy[0] = d.r;
      dy[1] = d.theta;
      dy[2] = d.u;
      dy[3] = d.v;
    };
    const std::array<double, 4> y0{x.r, x.theta, x.u, x.v};
    const DenseSolution sol = integrate(rhs, y0, t, t + dt, opt.tol);
    const auto yf = sol.node(sol.n_steps());
    x = {yf[0], yf[1], yf[2], yf[3]};
  };

  while (t < opt.t_cap) {
    const GuidanceOutput g = guidance(t, x);
    if (g.tf_pred < opt.stop_tf) {
      res.converged = true;
      break;
    }
    const double beta_eff =
        noise.beta_noise > 0.0
            ? cfg.beta * (1.0 + rng.uniform(-noise.beta_noise, noise.beta_noise))
            : cfg.beta;
    res.steps.push_back({t, x, g.alpha, g.tf_pred, beta_eff});
    res.max_abs_alpha = std::max(res.max_abs_alpha, std::abs(g.alpha));

    const double dt = std::min(opt.control_dt, opt.t_cap - t);
    fly_interval(g.alpha, beta_eff, dt);
    t += dt;

    if (x.r < opt.r_guard[0] || x.r > opt.r_guard[1]) {
      res.diverged = true;
      break;
    }
  }

  res.final_state = x;
  res.elapsed = t;
  res.error = flight_error(x, spec.rf);
  return res;
}

GeneralizationReport generalization_suite(const GuidanceStack& stack, const TransferSpec& spec,
                                          const SailConfig& cfg,
                                          const GeneralizationOptions& opt) {
  GeneralizationReport rep;
  Rng rng(opt.seed);
  rep.trials.reserve(opt.n_trials);
  for (int i = 0; i < opt.n_trials; ++i) {
    GeneralizationTrial trial;
    trial.x0.r = rng.uniform(opt.box.r[0], opt.box.r[1]);
    trial.x0.theta = rng.uniform(opt.box.theta[0], opt.box.theta[1]);
    trial.x0.u = rng.uniform(opt.box.u[0], opt.box.u[1]);
    trial.x0.v = rng.uniform(opt.box.v[0], opt.box.v[1]);
    const SimResult sim = closed_loop(stack, trial.x0, spec, cfg, {}, opt.sim);
    trial.error = sim.error;
    trial.elapsed = sim.elapsed;
    trial.converged = sim.converged;
    trial.diverged = sim.diverged;
    trial.success = sim.converged && !sim.diverged &&
                    trial.error.max_component() <= opt.success_tol;
    if (trial.success) ++rep.n_success;
    rep.trials.push_back(trial);
  }
  rep.success_rate = opt.n_trials > 0 ? static_cast<double>(rep.n_success) / opt.n_trials : 0.0;
  return rep;
}

TimingReport time_guidance(const GuidanceStack& stack, const SailConfig& cfg, int n_calls,
                           std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  Rng rng(seed);
  StateBox box;
  std::vector<FlightState> states(n_calls);
  for (auto& s : states) {
    s = {rng.uniform(box.r[0], box.r[1]), rng.uniform(box.theta[0], box.theta[1]),
         rng.uniform(box.u[0], box.u[1]), rng.uniform(box.v[0], box.v[1])};
  }

  TimingReport rep;
  rep.n_calls = n_calls;
  rep.min_us = std::numeric_limits<double>::infinity();
  double sum_us = 0.0;
  volatile double sink = 0.0;  // keep the calls from being optimized away
  for (const FlightState& s : states) {
    const auto t0 = clock::now();
    const GuidanceOutput g = guidance_step(stack, s, cfg);
    const auto t1 = clock::now();
    sink = sink + g.alpha;
    const double us = std::chrono::duration<double, std::micro>(t1 - t0).count();
    sum_us += us;
    rep.min_us = std::min(rep.min_us, us);
    rep.max_us = std::max(rep.max_us, us);
  }
  rep.mean_us = n_calls > 0 ? sum_us / n_calls : 0.0;
  return rep;
}

}  // namespace sail
