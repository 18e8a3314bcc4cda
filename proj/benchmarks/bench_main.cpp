#include <benchmark/benchmark.h>

#include <array>

#include "sail/dynamics.hpp"
#include "sail/guidance.hpp"
#include "sail/mlp.hpp"
#include "sail/ode.hpp"
#include "sail/rng.hpp"
#include "sail/runtime.hpp"

namespace {

using namespace sail;

void bm_steering_law(benchmark::State& state) {
  const SailConfig cfg;
  Rng rng(1);
  std::array<double, 1024> lu{}, lv{};
  for (std::size_t i = 0; i < lu.size(); ++i) {
    lu[i] = rng.uniform(-40.0, 40.0);
    lv[i] = rng.uniform(-40.0, 40.0);
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(flown_alpha(lu[i & 1023], lv[i & 1023], cfg));
    ++i;
  }
}
BENCHMARK(bm_steering_law);

void bm_integrate_orbit(benchmark::State& state) {
  const OdeRhs kepler = [](double, std::span<const double> y, std::span<double> dy) {
    const FlightState x{y[0], y[1], y[2], y[3]};
    const FlightState d = dynamics_rhs(x, 0.0, 0.0);
    dy[0] = d.r;
    dy[1] = d.theta;
    dy[2] = d.u;
    dy[3] = d.v;
  };
  const std::array<double, 4> y0{1.0, 0.0, 0.0, 1.1};
  for (auto _ : state) {
    const DenseSolution sol = integrate(kepler, y0, 0.0, 2.0 * std::numbers::pi);
    benchmark::DoNotOptimize(sol.t_end());
  }
}
BENCHMARK(bm_integrate_orbit);

MlpModel bench_model(int inputs, std::uint64_t seed) {
  Rng rng(seed);
  return make_mlp({inputs, 20, 20, 20, 1}, rng);
}

void bm_mlp_forward(benchmark::State& state) {
  const MlpModel model = bench_model(4, 5);
  const std::array<double, 4> x{1.1, 0.05, 0.95, 3.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.forward(x));
  }
}
BENCHMARK(bm_mlp_forward);

void bm_guidance_step(benchmark::State& state) {
  const GuidanceStack stack{bench_model(3, 5), bench_model(4, 6), bench_model(4, 7)};
  const SailConfig cfg;
  const FlightState x{1.1, 0.3, 0.05, 0.95};
  for (auto _ : state) {
    benchmark::DoNotOptimize(guidance_step(stack, x, cfg));
  }
}
BENCHMARK(bm_guidance_step);

}  // namespace

BENCHMARK_MAIN();
