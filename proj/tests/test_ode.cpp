#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sail/dynamics.hpp"
#include "sail/ode.hpp"

using namespace sail;

namespace {

const OdeRhs exp_decay = [](double, std::span<const double> y, std::span<double> dy) {
  dy[0] = -y[0];
};

const OdeRhs oscillator = [](double, std::span<const double> y, std::span<double> dy) {
  dy[0] = y[1];
  dy[1] = -y[0];
};

// Planar two-body motion in polar coordinates (no thrust).
const OdeRhs kepler = [](double, std::span<const double> y, std::span<double> dy) {
  const FlightState x{y[0], y[1], y[2], y[3]};
  const FlightState d = dynamics_rhs(x, 0.0, 0.0);
  dy[0] = d.r;
  dy[1] = d.theta;
  dy[2] = d.u;
  dy[3] = d.v;
};

double kepler_energy(std::span<const double> y) {
  return 0.5 * (y[2] * y[2] + y[3] * y[3]) - 1.0 / y[0];
}

}  // namespace

TEST_CASE("exponential decay to tight tolerance, both directions") {
  const double y0[] = {1.0};
  const DenseSolution fwd = integrate(exp_decay, y0, 0.0, 1.0);
  CHECK(std::abs(fwd.sample(1.0)[0] - 0.36787944117144233) < 1e-9);
  CHECK(std::abs(fwd.sample(0.5)[0] - std::exp(-0.5)) < 1e-8);
  CHECK(fwd.t_begin() == 0.0);
  CHECK(fwd.t_end() == 1.0);

  const double y1[] = {0.36787944117144233};
  const DenseSolution bwd = integrate(exp_decay, y1, 1.0, 0.0);
  CHECK(std::abs(bwd.sample(0.0)[0] - 1.0) < 1e-9);
  CHECK(std::abs(bwd.sample(0.25)[0] - std::exp(-0.25)) < 1e-8);
}

TEST_CASE("dense output interpolates between mesh nodes at solver accuracy") {
  const double y0[] = {0.0, 1.0};  // sin(t), cos(t)
  const DenseSolution sol = integrate(oscillator, y0, 0.0, 10.0);
  for (int i = 0; i <= 1000; ++i) {
    const double t = 10.0 * i / 1000.0;
    const auto y = sol.sample(t);
    CHECK(std::abs(y[0] - std::sin(t)) < 1e-8);
    CHECK(std::abs(y[1] - std::cos(t)) < 1e-8);
  }
  CHECK_THROWS_AS(sol.sample(10.5), std::out_of_range);
  CHECK_THROWS_AS(sol.sample(-0.5), std::out_of_range);
}

TEST_CASE("circular orbit closes after one period") {
  const double y0[] = {1.0, 0.0, 0.0, 1.0};
  const double period = 2.0 * std::numbers::pi;
  const DenseSolution sol = integrate(kepler, y0, 0.0, period);
  const auto yf = sol.sample(period);
  CHECK(std::abs(yf[0] - 1.0) < 1e-7);
  CHECK(std::abs(yf[2]) < 1e-7);
  CHECK(std::abs(yf[3] - 1.0) < 1e-7);
  CHECK(std::abs(yf[1] - period) < 1e-7);
}

TEST_CASE("elliptic orbit closes and conserves energy on every node") {
  const double y0[] = {1.0, 0.0, 0.0, 1.2};
  const double energy = kepler_energy(y0);
  const double a = -0.5 / energy;  // semimajor axis from the vis-viva energy
  const double period = 2.0 * std::numbers::pi * std::pow(a, 1.5);

  const DenseSolution sol = integrate(kepler, y0, 0.0, period);
  for (std::size_t i = 0; i <= sol.n_steps(); ++i) {
    CHECK(std::abs(kepler_energy(sol.node(i)) - energy) < 1e-8);
  }
  const auto yf = sol.sample(period);
  CHECK(std::abs(yf[0] - y0[0]) < 1e-7);
  CHECK(std::abs(yf[2] - y0[2]) < 1e-7);
  CHECK(std::abs(yf[3] - y0[3]) < 1e-7);
}

TEST_CASE("event location matches a plain-bisection oracle and the analytic roots") {
  const double y0[] = {std::sin(0.2), std::cos(0.2)};
  const DenseSolution sol = integrate(oscillator, y0, 0.2, 10.0);
  const EventFn crossing = [](double, std::span<const double> y) { return y[0]; };
  const auto hits = locate_events(sol, crossing, 1e-12);

  // sin(t) vanishes at pi, 2 pi, 3 pi inside (0.2, 10).
  REQUIRE(hits.size() == 3);
  const double expected[] = {std::numbers::pi, 2.0 * std::numbers::pi, 3.0 * std::numbers::pi};
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(hits[k].t - expected[k]) < 1e-8);
    CHECK(std::abs(hits[k].y[0]) < 1e-10);

    // Oracle: plain bisection on the same dense interpolant.
    double lo = expected[k] - 0.5, hi = expected[k] + 0.5;
    double glo = sol.sample(lo)[0];
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double gm = sol.sample(mid)[0];
      if ((gm > 0.0) == (glo > 0.0)) {
        lo = mid;
        glo = gm;
      } else {
        hi = mid;
      }
    }
    CHECK(std::abs(hits[k].t - 0.5 * (lo + hi)) < 1e-9);
  }
}

TEST_CASE("domain guard aborts with the rejected time attached") {
  // Finite-time blowup: y' = y^2 escapes at t = 1.
  const OdeRhs blowup = [](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = y[0] * y[0];
  };
  const double y0[] = {1.0};
  const OdeGuard guard = [](double, std::span<const double> y) { return y[0] < 5.0; };
  try {
    integrate(blowup, y0, 0.0, 2.0, {}, guard);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    CHECK(e.kind() == IntegrationError::Kind::domain);
    CHECK(e.t_fail() > 0.5);
    CHECK(e.t_fail() < 1.0);
  }

  // Without the guard the step control collapses near the singularity.
  try {
    integrate(blowup, y0, 0.0, 2.0);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    CHECK((e.kind() == IntegrationError::Kind::step_underflow ||
           e.kind() == IntegrationError::Kind::max_steps));
  }
}

TEST_CASE("input validation") {
  const double y0[] = {1.0};
  CHECK_THROWS_AS(integrate(exp_decay, y0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(integrate(exp_decay, std::span<const double>{}, 0.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("tighter tolerances tighten the answer") {
  const double y0[] = {1.0, 0.0, 0.0, 1.2};
  const double period = 2.0 * std::numbers::pi * std::pow(-0.5 / kepler_energy(y0), 1.5);
  const DenseSolution loose = integrate(kepler, y0, 0.0, period, {1e-6, 1e-8});
  const DenseSolution tight = integrate(kepler, y0, 0.0, period, {1e-12, 1e-14});
  const double err_loose = std::abs(loose.sample(period)[0] - 1.0);
  const double err_tight = std::abs(tight.sample(period)[0] - 1.0);
  CHECK(err_tight < err_loose);
  CHECK(err_tight < 1e-9);
  CHECK(loose.n_steps() < tight.n_steps());
}
