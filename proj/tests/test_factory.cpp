#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sail/dynamics.hpp"
#include "sail/factory.hpp"
#include "sail/guidance.hpp"
#include "sail/rng.hpp"

using namespace sail;

namespace {

constexpr double kPi = std::numbers::pi;

// Terminal adjoints of the converged smoothed case-1-style transfer to
// r = 1.524; the perturbation grid is centered on them.
constexpr double kLamRf = -20.816664746945936;
constexpr double kLamUf = 7.319941270871652;

SailConfig hard_config() {
  SailConfig cfg;
  cfg.phi_max = kPi / 3.0;
  cfg.delta = 0.0;  // exact clamp: the only law that conserves H along the arc
  return cfg;
}

double node_hamiltonian(const OptimalTrajectory& traj, std::size_t k, const SailConfig& cfg) {
  return hamiltonian(traj.states[k], traj.costates[k], traj.alpha[k], cfg.beta);
}

}  // namespace

TEST_CASE("reversed-time rates are the exact negation of the forward rates") {
  const SailConfig cfg = hard_config();
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const BackwardState y{rng.uniform(0.8, 1.6),   rng.uniform(-0.3, 0.3),
                          rng.uniform(0.6, 1.2),   rng.uniform(-40.0, 40.0),
                          rng.uniform(-40.0, 40.0), rng.uniform(-40.0, 40.0)};
    const BackwardState d = backward_rhs(y, cfg);
    const double alpha = flown_alpha(y.lam_U, y.lam_V, cfg);
    const FlightState dx = dynamics_rhs({y.R, 0.0, y.U, y.V}, alpha, cfg.beta);
    const Costate dl = costate_rhs({y.R, 0.0, y.U, y.V}, {y.lam_R, 0.0, y.lam_U, y.lam_V},
                                   alpha, cfg.beta);
    CHECK(d.R == -dx.r);
    CHECK(d.U == -dx.u);
    CHECK(d.V == -dx.v);
    CHECK(d.lam_R == -dl.lam_r);
    CHECK(d.lam_U == -dl.lam_u);
    CHECK(d.lam_V == -dl.lam_v);
  }
}

TEST_CASE("kepler reversal with zero adjoints leaves only the two-body terms") {
  // With zero adjoints the tie-break convention parks the command at -pi/2;
  // an attitude bound of pi/2 leaves it there, where the thrust vanishes
  // (cos = 0), so the reversed rates are pure two-body motion: identically
  // zero on a circular orbit. The adjoint rates are linear-homogeneous in the
  // adjoints and vanish exactly.
  SailConfig cfg = hard_config();
  cfg.phi_max = kPi / 2.0;
  const BackwardState y{1.524, 0.0, 1.0 / std::sqrt(1.524), 0.0, 0.0, 0.0};
  const BackwardState d = backward_rhs(y, cfg);
  CHECK(d.R == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(d.U == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(d.V == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(d.lam_R == 0.0);
  CHECK(d.lam_U == 0.0);
  CHECK(d.lam_V == 0.0);

  // Under a tighter bound the clamp re-engages the thrust: the state rates
  // then differ from Kepler exactly by the acceleration of the clamped
  // command, while the adjoint rates stay zero.
  const SailConfig tight = hard_config();
  const BackwardState dt_ = backward_rhs(y, tight);
  const double alpha = flown_alpha(0.0, 0.0, tight);
  CHECK(std::abs(alpha) == doctest::Approx(tight.phi_max).epsilon(1e-15));
  const SrpAccel acc = srp_acceleration(1.524, alpha, tight.beta);
  CHECK(dt_.U == doctest::Approx(-acc.a_u).epsilon(1e-15));
  CHECK(dt_.V == doctest::Approx(-acc.a_v).epsilon(1e-15));
  CHECK(dt_.lam_R == 0.0);
  CHECK(dt_.lam_U == 0.0);
  CHECK(dt_.lam_V == 0.0);
}

TEST_CASE("transverse adjoint root matches the closed form at zero lam_u") {
  const SailConfig cfg = hard_config();
  const double lv0 = solve_lambda_v0(0.0, 1.524, cfg);

  // With lam_u = 0 the free minimizer is fixed at atan(1/sqrt 2), inside the
  // pi/3 bound, so the root solves 1 + lv0 * beta sin(a) cos^2(a) / R0^2 = 0.
  const double a = std::atan(1.0 / std::sqrt(2.0));
  const double closed = -1.524 * 1.524 / (cfg.beta * std::sin(a) * std::cos(a) * std::cos(a));
  CHECK(a == doctest::Approx(0.6154797086703873).epsilon(1e-15));
  CHECK(closed == doctest::Approx(-35.722409748165646).epsilon(1e-13));
  CHECK(lv0 == doctest::Approx(closed).epsilon(1e-10));
}

TEST_CASE("transverse adjoint root zeroes the arrival condition and is negative") {
  const SailConfig cfg = hard_config();
  Rng rng(12);
  for (int trial = 0; trial < 25; ++trial) {
    const double lam_u0 = rng.uniform(-5.0, 25.0);
    const double r0 = rng.uniform(1.0, 1.6);
    const double lv0 = solve_lambda_v0(lam_u0, r0, cfg);
    CHECK(lv0 < 0.0);
    const double alpha = flown_alpha(lam_u0, lv0, cfg);
    const SrpAccel acc = srp_acceleration(r0, alpha, cfg.beta);
    CHECK(std::abs(1.0 + lam_u0 * acc.a_u + lv0 * acc.a_v) <= 1e-12);
  }
}

TEST_CASE("backward arcs start on the target orbit and conserve the hamiltonian") {
  const SailConfig cfg = hard_config();
  const OptimalTrajectory traj =
      propagate_parameterized(kLamRf + 2.0, kLamUf + 8.0, 1.524, 10.0, cfg);

  REQUIRE(traj.tau.size() >= 2);
  CHECK(traj.tau.front() == 0.0);
  CHECK(traj.tau.back() == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(traj.states.front().r == doctest::Approx(1.524).epsilon(1e-14));
  CHECK(traj.states.front().u == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(traj.states.front().v == doctest::Approx(1.0 / std::sqrt(1.524)).epsilon(1e-14));
  CHECK_FALSE(traj.degraded);

  for (std::size_t k = 0; k < traj.tau.size(); ++k) {
    CHECK(std::abs(node_hamiltonian(traj, k, cfg)) <= 1e-6);
  }

  // The commands stored on the grid are exactly the saturated law evaluated
  // from the stored adjoints.
  for (std::size_t k = 0; k < traj.tau.size(); ++k) {
    CHECK(traj.alpha[k] ==
          flown_alpha(traj.costates[k].lam_u, traj.costates[k].lam_v, cfg));
    CHECK(std::abs(traj.alpha[k]) <= cfg.phi_max + 1e-12);
  }
}

TEST_CASE("backward then forward integration closes the loop") {
  const SailConfig cfg = hard_config();
  // A no-jump arc and a one-jump arc.
  const OptimalTrajectory a =
      propagate_parameterized(kLamRf - 77.0 / 6.0, kLamUf + 5.5, 1.524, 10.0, cfg);
  const OptimalTrajectory b =
      propagate_parameterized(kLamRf - 20.0, kLamUf + 11.0, 1.524, 10.0, cfg);
  REQUIRE(a.n_jumps == 0);
  REQUIRE(b.n_jumps == 1);
  CHECK(round_trip_error(a, cfg) <= 1e-6);
  CHECK(round_trip_error(b, cfg) <= 1e-6);
}

TEST_CASE("command jumps are isolated, refined, and counted") {
  const SailConfig cfg = hard_config();
  const OptimalTrajectory traj =
      propagate_parameterized(kLamRf - 20.0, kLamUf + 11.0, 1.524, 10.0, cfg);
  REQUIRE(traj.n_jumps == 1);
  REQUIRE(traj.tau_jump.has_value());
  CHECK(*traj.tau_jump > 0.0);
  CHECK(*traj.tau_jump < 10.0);
  CHECK_FALSE(traj.degraded);

  // At the jump the transverse adjoint crosses zero while the radial one is
  // positive; sample the stored mesh on both sides.
  std::size_t k_before = 0;
  while (k_before + 1 < traj.tau.size() && traj.tau[k_before + 1] <= *traj.tau_jump) ++k_before;
  const std::size_t k_after = k_before + 1;
  REQUIRE(k_after < traj.tau.size());
  CHECK(traj.costates[k_before].lam_u > 0.0);
  CHECK(traj.costates[k_before].lam_v * traj.costates[k_after].lam_v < 0.0);
  // Rail-to-rail: the command magnitude stays at the bound on both sides.
  CHECK(std::abs(traj.alpha[k_before]) == doctest::Approx(cfg.phi_max).epsilon(1e-9));
  CHECK(std::abs(traj.alpha[k_after]) == doctest::Approx(cfg.phi_max).epsilon(1e-9));
  CHECK(traj.alpha[k_before] * traj.alpha[k_after] < 0.0);
}

TEST_CASE("preprocessing keeps no-jump arcs identical and smooths one-jump arcs") {
  const SailConfig cfg = hard_config();

  const OptimalTrajectory plain = preprocess_alpha(
      propagate_parameterized(kLamRf - 77.0 / 6.0, kLamUf + 5.5, 1.524, 10.0, cfg));
  REQUIRE(plain.n_jumps == 0);
  for (std::size_t k = 0; k < plain.tau.size(); ++k) CHECK(plain.alpha_pre[k] == plain.alpha[k]);

  const OptimalTrajectory jump =
      preprocess_alpha(propagate_parameterized(kLamRf - 20.0, kLamUf + 11.0, 1.524, 10.0, cfg));
  REQUIRE(jump.n_jumps == 1);

  // The sign-normalized command steps across the jump by no more than ten
  // times the largest step anywhere else (continuity of the training target).
  double step_at_jump = 0.0, step_elsewhere = 0.0;
  for (std::size_t k = 1; k < jump.tau.size(); ++k) {
    const double d = std::abs(jump.alpha_pre[k] - jump.alpha_pre[k - 1]);
    const bool straddles = jump.tau[k - 1] <= *jump.tau_jump && jump.tau[k] > *jump.tau_jump;
    (straddles ? step_at_jump : step_elsewhere) = std::max(straddles ? step_at_jump : step_elsewhere, d);
  }
  CHECK(step_at_jump <= 10.0 * step_elsewhere);

  // The raw command must still be recoverable from the stored adjoint sign.
  for (std::size_t k = 0; k < jump.tau.size(); ++k) {
    CHECK(revert_alpha(jump.alpha_pre[k], jump.costates[k].lam_v) == jump.alpha[k]);
  }
}

TEST_CASE("dataset generation filters, counts, and stays deterministic") {
  const SailConfig cfg = hard_config();
  DatasetOptions opt;
  opt.n_lam_r = 7;
  opt.n_lam_u = 7;

  const Dataset ds = generate_dataset(kLamRf, kLamUf, cfg, opt);
  CHECK(ds.stats.n_seeds == 49);
  CHECK(ds.stats.n_accepted == static_cast<int>(ds.trajectories.size()));
  CHECK(ds.stats.n_accepted + ds.stats.n_rejected_radius + ds.stats.n_rejected_multijump +
            ds.stats.n_rejected_infeasible ==
        ds.stats.n_seeds);
  CHECK(ds.stats.n_records == ds.records.size());
  CHECK(ds.stats.n_accepted > 0);
  CHECK(ds.stats.n_jump_trajectories > 0);

  // The perturbation box never contains the nominal pair: the u-adjoint
  // offsets start at +5.
  for (const OptimalTrajectory& traj : ds.trajectories) {
    CHECK(traj.lam_u0_seed - kLamUf >= 5.0 - 1e-12);
    CHECK(traj.max_radius <= opt.radius_filter);
    CHECK(traj.preprocessed);
  }

  // Records carry per-node data consistent with their source arcs.
  for (const DatasetRecord& rec : ds.records) {
    CHECK(rec.tf >= 0.0);
    CHECK(rec.tf <= opt.tf_max);
    CHECK(std::abs(rec.alpha_pre) <= cfg.phi_max + 1e-12);
    CHECK(revert_alpha(rec.alpha_pre, rec.lam_v) == rec.alpha);
    CHECK(rec.traj_id < ds.trajectories.size());
  }

  // Bitwise determinism of a rerun with identical inputs.
  const Dataset again = generate_dataset(kLamRf, kLamUf, cfg, opt);
  REQUIRE(again.records.size() == ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    CHECK(again.records[i].r == ds.records[i].r);
    CHECK(again.records[i].u == ds.records[i].u);
    CHECK(again.records[i].v == ds.records[i].v);
    CHECK(again.records[i].tf == ds.records[i].tf);
    CHECK(again.records[i].alpha == ds.records[i].alpha);
    CHECK(again.records[i].alpha_pre == ds.records[i].alpha_pre);
    CHECK(again.records[i].lam_v == ds.records[i].lam_v);
  }
}

TEST_CASE("seed grids below two points per axis are rejected") {
  const SailConfig cfg = hard_config();
  DatasetOptions opt;
  opt.n_lam_r = 1;
  CHECK_THROWS_AS(generate_dataset(kLamRf, kLamUf, cfg, opt), std::invalid_argument);
}
