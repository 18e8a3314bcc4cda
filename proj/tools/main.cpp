#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "config.hpp"
#include "sail/artifacts.hpp"
#include "sail/guidance.hpp"
#include "sail/train.hpp"

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using namespace sail;
using cli::RunConfig;

// Exit protocol: 2 flags a run that failed (solver non-convergence, divergence,
// unusable artifacts), 3 flags bad input (config file, flags, value ranges).
constexpr int kExitOk = 0;
constexpr int kExitRun = 2;
constexpr int kExitConfig = 3;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;  // overrides config + environment when set
  bool si = false;
};

RunConfig load_config(const CommonOpts& common) {
  RunConfig cfg = common.config_path.empty() ? RunConfig{}
                                             : cli::parse_config_file(common.config_path);
  // Precedence for the output directory: config < environment < flag.
  if (const char* env = std::getenv("SAILOPT_OUT_DIR"); env && *env) cfg.out_dir = env;
  if (!common.out_dir.empty()) cfg.out_dir = common.out_dir;
  fs::create_directories(cfg.out_dir);
  return cfg;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

ContinuationOptions continuation_options(const RunConfig& cfg) {
  ContinuationOptions opt;
  opt.n_starts = cfg.n_starts;
  opt.seed = cfg.seed_multistart;
  opt.phi_steps = cfg.phi_steps;
  return opt;
}

FlightState pick_departure(const RunConfig& cfg, const std::string& which) {
  if (which == "1") return cfg.transfer.x0;
  if (which == "2") return cfg.x0_case2;
  if (which == "robust") return cfg.x0_robust;
  throw cli::ConfigError("unknown departure case '" + which + "' (use 1, 2, or robust)");
}

std::optional<FlightState> parse_x0(const std::string& spec) {
  if (spec.empty()) return std::nullopt;
  FlightState x;
  char c1 = 0, c2 = 0, c3 = 0;
  std::istringstream ss(spec);
  if (!(ss >> x.r >> c1 >> x.theta >> c2 >> x.u >> c3 >> x.v) || c1 != ',' || c2 != ',' ||
      c3 != ',' || !(ss >> std::ws).eof()) {
    throw cli::ConfigError("--x0 expects 'r,theta,u,v'");
  }
  return x;
}

ordered_json json_state(const FlightState& x) {
  return {{"r", x.r}, {"theta", x.theta}, {"u", x.u}, {"v", x.v}};
}

ordered_json json_variables(const ShootingResult& res) {
  return {{"lam_r0", res.z.lam_r0}, {"lam_u0", res.z.lam_u0}, {"lam_v0", res.z.lam_v0},
          {"tf", res.z.tf},         {"residual_norm", res.residual_norm},
          {"iterations", res.iterations}};
}

struct NominalRun {
  ShootingResult unconstrained;
  ShootingResult constrained;
  Costate final_costates;
  double multistart_s = 0.0;
  double homotopy_s = 0.0;
};

NominalRun solve_nominal(const RunConfig& cfg, const FlightState& x0) {
  using clock = std::chrono::steady_clock;
  TransferSpec spec = cfg.transfer;
  spec.x0 = x0;
  const ContinuationOptions opt = continuation_options(cfg);

  NominalRun run;
  auto t0 = clock::now();
  run.unconstrained = solve_unconstrained_multistart(spec, cfg.sail, opt);
  run.multistart_s = std::chrono::duration<double>(clock::now() - t0).count();
  if (!run.unconstrained.converged) {
    throw std::runtime_error("nominal: unconstrained multistart did not converge");
  }

  t0 = clock::now();
  run.constrained = homotopy_solve(spec, cfg.sail, opt);
  run.homotopy_s = std::chrono::duration<double>(clock::now() - t0).count();
  if (!run.constrained.converged) {
    throw std::runtime_error("nominal: continuation to the target bound did not converge");
  }

  const TrajectoryTrace tail = trace_transfer(spec, cfg.sail, run.constrained.z, 8);
  run.final_costates = tail.costates.back();
  return run;
}

int cmd_nominal(const CommonOpts& common, const std::string& which_case,
                bool unconstrained_only, double delta_override) {
  RunConfig cfg = load_config(common);
  if (delta_override >= 0.0) {
    cfg.sail.delta = delta_override;
    cfg.sail.validate();
  }
  const FlightState x0 = pick_departure(cfg, which_case);
  TransferSpec spec = cfg.transfer;
  spec.x0 = x0;
  const UnitScales units = common.si ? UnitScales::si() : UnitScales::canonical();

  ordered_json j;
  j["schema_version"] = 1;
  j["config_hash"] = cli::config_hash(cfg);
  j["case"] = which_case;
  j["x0"] = json_state(x0);
  j["rf"] = spec.rf;
  j["beta"] = cfg.sail.beta;
  j["phi_max"] = cfg.sail.phi_max;
  j["delta"] = cfg.sail.delta;

  if (unconstrained_only) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const ShootingResult res =
        solve_unconstrained_multistart(spec, cfg.sail, continuation_options(cfg));
    const double elapsed_s = std::chrono::duration<double>(clock::now() - t0).count();
    if (!res.converged) {
      throw std::runtime_error("nominal: unconstrained multistart did not converge");
    }
    const TrajectoryTrace trace =
        trace_transfer(spec, cfg.sail, res.z, cfg.trace_samples, /*clamped=*/false);
    const std::string csv = trace_csv(trace, units);
    write_file(out_path(cfg, "nominal_trace.csv"), csv);
    j["unconstrained"] = json_variables(res);
    j["trace_csv_hash"] = fnv1a_hex(csv);
    j["timings_s"] = {{"multistart", elapsed_s}};
    write_file(out_path(cfg, "nominal.json"), j.dump(2) + "\n");
    std::cout << "unconstrained tf = " << format_g17(res.z.tf) << " TU\n"
              << "wrote " << out_path(cfg, "nominal_trace.csv") << " and nominal.json\n";
    return kExitOk;
  }

  const NominalRun run = solve_nominal(cfg, x0);
  const TrajectoryTrace trace =
      trace_transfer(spec, cfg.sail, run.constrained.z, cfg.trace_samples);
  const std::string csv = trace_csv(trace, units);
  write_file(out_path(cfg, "nominal_trace.csv"), csv);

  j["unconstrained"] = json_variables(run.unconstrained);
  j["constrained"] = json_variables(run.constrained);
  j["final_costates"] = {{"lam_r", run.final_costates.lam_r},
                         {"lam_u", run.final_costates.lam_u},
                         {"lam_v", run.final_costates.lam_v}};
  j["trace_csv_hash"] = fnv1a_hex(csv);
  j["timings_s"] = {{"multistart", run.multistart_s}, {"homotopy", run.homotopy_s}};
  write_file(out_path(cfg, "nominal.json"), j.dump(2) + "\n");

  std::cout << "unconstrained tf = " << format_g17(run.unconstrained.z.tf) << " TU\n"
            << "constrained tf   = " << format_g17(run.constrained.z.tf) << " TU\n"
            << "wrote " << out_path(cfg, "nominal_trace.csv") << " and nominal.json\n";
  return kExitOk;
}

// Terminal adjoints that anchor the dataset seed grid: reuse a previous
// nominal run when its artifact is present, otherwise solve afresh.
std::pair<double, double> dataset_anchor(const RunConfig& cfg, const std::string& nominal_path) {
  const std::string path =
      nominal_path.empty() ? out_path(cfg, "nominal.json") : nominal_path;
  if (fs::exists(path)) {
    const ordered_json j = ordered_json::parse(read_file(path));
    if (j.at("config_hash").get<std::string>() == cli::config_hash(cfg) &&
        j.at("case").get<std::string>() == "1" && j.contains("final_costates")) {
      return {j.at("final_costates").at("lam_r").get<double>(),
              j.at("final_costates").at("lam_u").get<double>()};
    }
    std::cerr << "note: " << path << " does not carry this config's constrained solution; "
              << "re-solving\n";
  }
  const NominalRun run = solve_nominal(cfg, cfg.transfer.x0);
  return {run.final_costates.lam_r, run.final_costates.lam_u};
}

int cmd_dataset(const CommonOpts& common, const std::string& nominal_path) {
  const RunConfig cfg = load_config(common);
  const auto [lam_rf, lam_uf] = dataset_anchor(cfg, nominal_path);

  // Training arcs fly the exact-clamp law regardless of the configured
  // smoothing: only on the rail is the transfer Hamiltonian conserved along
  // an arc and the sign-revert preprocessing exact, and both properties are
  // checked downstream. The smoothed law stays in use for the nominal solve.
  SailConfig arc_cfg = cfg.sail;
  arc_cfg.delta = 0.0;

  const Dataset ds = generate_dataset(lam_rf, lam_uf, arc_cfg, cfg.dataset);
  if (ds.stats.n_accepted == 0) {
    throw std::runtime_error("dataset: every seed was rejected; nothing to write");
  }

  const std::string csv = dataset_csv(ds.records);
  const std::string csv_hash = fnv1a_hex(csv);
  write_file(out_path(cfg, "dataset.csv"), csv);
  write_file(out_path(cfg, "dataset_manifest.json"),
             dataset_manifest_json(ds.stats, cfg.dataset, arc_cfg, lam_rf, lam_uf,
                                   cli::config_hash(cfg), csv_hash));

  std::cout << "seeds " << ds.stats.n_seeds << ", accepted " << ds.stats.n_accepted
            << " (radius " << ds.stats.n_rejected_radius << ", multi-jump "
            << ds.stats.n_rejected_multijump << ", infeasible "
            << ds.stats.n_rejected_infeasible << " rejected), records "
            << ds.stats.n_records << "\n"
            << "content hash " << csv_hash << "\n"
            << "wrote " << out_path(cfg, "dataset.csv") << " and dataset_manifest.json\n";
  return kExitOk;
}

int cmd_train(const CommonOpts& common, const std::string& dataset_path,
              const std::string& manifest_path, bool with_ablation) {
  const RunConfig cfg = load_config(common);
  const std::string ds_path =
      dataset_path.empty() ? out_path(cfg, "dataset.csv") : dataset_path;
  const std::string mf_path =
      manifest_path.empty() ? out_path(cfg, "dataset_manifest.json") : manifest_path;

  const std::vector<DatasetRecord> records = parse_dataset_csv(read_file(ds_path));
  const std::string manifest_hash = fnv1a_hex(read_file(mf_path));

  struct Job {
    const char* name;
    RegressionTarget target;
    std::uint64_t seed;
    const char* file;
  };
  const Job jobs[] = {
      {"n_tf", RegressionTarget::tf, cfg.seed_train_tf, "n_tf.json"},
      {"n_alpha_pre", RegressionTarget::alpha_pre, cfg.seed_train_alpha_pre,
       "n_alpha_pre.json"},
      {"n_lam_v", RegressionTarget::lam_v, cfg.seed_train_lam_v, "n_lam_v.json"},
  };

  ordered_json report;
  report["schema_version"] = 1;
  report["config_hash"] = cli::config_hash(cfg);
  report["dataset_records"] = records.size();
  report["training_manifest_hash"] = manifest_hash;
  for (const Job& job : jobs) {
    TrainHyper hp = cfg.train;
    hp.seed = job.seed;
    const auto [model, rep] = train_lm(make_train_data(records, job.target), hp, manifest_hash);
    save_model(model, out_path(cfg, job.file));
    report[job.name] = {{"epochs", rep.epochs_run},
                        {"mse_train", rep.mse_train},
                        {"mse_val", rep.mse_val},
                        {"mse_test", rep.mse_test},
                        {"stop_reason", to_string(rep.stop_reason)},
                        {"n_train", rep.n_train},
                        {"n_val", rep.n_val},
                        {"n_test", rep.n_test}};
    std::cout << job.name << ": val MSE " << format_g17(rep.mse_val) << " after "
              << rep.epochs_run << " epochs (" << to_string(rep.stop_reason) << ")\n";
  }
  write_file(out_path(cfg, "train_report.json"), report.dump(2) + "\n");
  std::cout << "wrote models and " << out_path(cfg, "train_report.json") << "\n";
  return kExitOk;
}

GuidanceStack load_stack(const RunConfig& cfg, const std::string& models_dir) {
  const fs::path dir = models_dir.empty() ? fs::path(cfg.out_dir) : fs::path(models_dir);
  GuidanceStack stack{load_model((dir / "n_tf.json").string()),
                      load_model((dir / "n_alpha_pre.json").string()),
                      load_model((dir / "n_lam_v.json").string())};
  stack.validate();
  return stack;
}

int cmd_generalize(const RunConfig& cfg, const GuidanceStack& stack) {
  GeneralizationOptions opt = cfg.gen;
  opt.seed = cfg.seed_generalization;
  opt.sim = cfg.sim;
  const GeneralizationReport rep = generalization_suite(stack, cfg.transfer, cfg.sail, opt);

  ordered_json j;
  j["schema_version"] = 1;
  j["config_hash"] = cli::config_hash(cfg);
  j["n_trials"] = opt.n_trials;
  j["success_tol"] = opt.success_tol;
  j["n_success"] = rep.n_success;
  j["success_rate"] = rep.success_rate;
  ordered_json trials = ordered_json::array();
  for (const GeneralizationTrial& t : rep.trials) {
    trials.push_back({{"x0", json_state(t.x0)},
                      {"error", {{"d_r", t.error.d_r}, {"d_u", t.error.d_u},
                                 {"d_v", t.error.d_v}}},
                      {"elapsed_tu", t.elapsed},
                      {"converged", t.converged},
                      {"diverged", t.diverged},
                      {"success", t.success}});
  }
  j["trials"] = trials;
  write_file(out_path(cfg, "generalization.json"), j.dump(2) + "\n");

  std::cout << rep.n_success << " of " << opt.n_trials << " random departures reached the "
            << "target set (rate " << format_g17(rep.success_rate) << ")\n"
            << "wrote " << out_path(cfg, "generalization.json") << "\n";
  return kExitOk;
}

int cmd_simulate(const CommonOpts& common, const std::string& models_dir,
                 const std::string& which_case, const std::string& x0_spec, double noise,
                 bool generalize) {
  const RunConfig cfg = load_config(common);
  // Usage errors before the (possibly missing) model files are touched.
  const FlightState x0 = parse_x0(x0_spec).value_or(pick_departure(cfg, which_case));
  const GuidanceStack stack = load_stack(cfg, models_dir);
  if (generalize) return cmd_generalize(cfg, stack);

  // The robustness departure flies under the configured actuation noise by
  // default; the clean cases stay noise-free unless --noise says otherwise.
  PerturbationSpec perturb;
  perturb.seed = cfg.seed_noise;
  if (noise >= 0.0) {
    perturb.beta_noise = noise;
  } else if (x0_spec.empty() && which_case == "robust") {
    perturb.beta_noise = cfg.noise_amplitude;
  }

  const SimResult res = closed_loop(stack, x0, cfg.transfer, cfg.sail, perturb, cfg.sim);

  const UnitScales units = common.si ? UnitScales::si() : UnitScales::canonical();
  const std::string csv = sim_csv(res, units);
  write_file(out_path(cfg, "sim.csv"), csv);

  ordered_json j;
  j["schema_version"] = 1;
  j["config_hash"] = cli::config_hash(cfg);
  j["x0"] = json_state(x0);
  j["beta_noise"] = perturb.beta_noise;
  j["converged"] = res.converged;
  j["diverged"] = res.diverged;
  j["elapsed_tu"] = res.elapsed;
  j["final_state"] = json_state(res.final_state);
  j["error"] = {{"d_r", res.error.d_r}, {"d_u", res.error.d_u}, {"d_v", res.error.d_v}};
  j["max_abs_alpha"] = res.max_abs_alpha;
  j["command_bound"] = command_bound(cfg.sail.phi_max, cfg.sail.delta);
  j["sim_csv_hash"] = fnv1a_hex(csv);
  write_file(out_path(cfg, "sim_summary.json"), j.dump(2) + "\n");

  std::cout << (res.converged ? "converged" : res.diverged ? "diverged" : "time-capped")
            << " after " << format_g17(res.elapsed) << " TU; terminal error (dr, du, dv) = ("
            << format_g17(res.error.d_r) << ", " << format_g17(res.error.d_u) << ", "
            << format_g17(res.error.d_v) << ")\n"
            << "wrote " << out_path(cfg, "sim.csv") << " and sim_summary.json\n";
  return res.converged && !res.diverged ? kExitOk : kExitRun;
}

int cmd_bench(const CommonOpts& common, const std::string& models_dir, int n_calls,
              bool with_shooting) {
  const RunConfig cfg = load_config(common);
  const GuidanceStack stack = load_stack(cfg, models_dir);

  const TimingReport rep = time_guidance(stack, cfg.sail, n_calls, cfg.seed_timing);
  std::cout << "guidance_step over " << rep.n_calls << " calls: mean "
            << format_g17(rep.mean_us) << " us, min " << format_g17(rep.min_us) << " us, max "
            << format_g17(rep.max_us) << " us\n";

  ordered_json j;
  j["schema_version"] = 1;
  j["config_hash"] = cli::config_hash(cfg);
  j["guidance"] = {{"n_calls", rep.n_calls},
                   {"mean_us", rep.mean_us},
                   {"min_us", rep.min_us},
                   {"max_us", rep.max_us}};

  if (with_shooting) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const NominalRun run = solve_nominal(cfg, cfg.transfer.x0);
    const double total_s = std::chrono::duration<double>(clock::now() - t0).count();
    std::cout << "full indirect solve (multistart + continuation): " << format_g17(total_s)
              << " s for tf = " << format_g17(run.constrained.z.tf) << " TU\n";
    j["shooting"] = {{"total_s", total_s},
                     {"multistart_s", run.multistart_s},
                     {"homotopy_s", run.homotopy_s},
                     {"tf", run.constrained.z.tf}};
  }
  write_file(out_path(cfg, "bench.json"), j.dump(2) + "\n");
  std::cout << "wrote " << out_path(cfg, "bench.json") << "\n";
  return kExitOk;
}

int cmd_bubble(const CommonOpts& common, double beta_lo, double beta_hi, int n_beta,
               int n_alpha, double phi) {
  const RunConfig cfg = load_config(common);
  const auto samples = force_bubble_grid(beta_lo, beta_hi, n_beta, phi, n_alpha);
  const UnitScales units = common.si ? UnitScales::si() : UnitScales::canonical();
  const std::string csv = bubble_csv(samples, units);
  write_file(out_path(cfg, "bubble.csv"), csv);

  ordered_json j;
  j["schema_version"] = 1;
  j["config_hash"] = cli::config_hash(cfg);
  j["beta_lo"] = beta_lo;
  j["beta_hi"] = beta_hi;
  j["n_beta"] = n_beta;
  j["n_alpha"] = n_alpha;
  j["phi"] = phi;
  j["n_samples"] = samples.size();
  j["bubble_csv_hash"] = fnv1a_hex(csv);
  write_file(out_path(cfg, "bubble.json"), j.dump(2) + "\n");

  std::cout << "wrote " << out_path(cfg, "bubble.csv") << " (" << samples.size()
            << " samples) and bubble.json\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"solar-sail minimum-time transfer toolkit"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_option("-c,--config", common.config_path, "configuration file (key = value lines)");
  app.add_option("-o,--out", common.out_dir, "output directory (overrides config and env)");
  app.add_flag("--si", common.si, "emit CSV columns in SI units");

  std::string which_case = "1";
  std::string nominal_path, dataset_path, manifest_path, models_dir, x0_spec;
  double noise = -1.0;
  int n_calls = 10000;
  bool with_shooting = false, unconstrained_only = false, generalize = false;
  bool train_ablation = false;
  double delta_override = -1.0;
  double beta_lo = 0.05, beta_hi = 0.2, phi = std::numbers::pi / 2.0;
  int n_beta = 4, n_alpha = 181;

  CLI::App* nominal = app.add_subcommand(
      "nominal", "solve the minimum-time transfer (multistart + continuation)");
  nominal->add_option("--case", which_case, "departure case: 1, 2, or robust");
  nominal->add_flag("--unconstrained", unconstrained_only,
                    "stop after the unconstrained multistart solve");
  nominal->add_option("--delta", delta_override,
                      "override the saturation smoothing constant (0 = hard clamp)");

  CLI::App* dataset =
      app.add_subcommand("dataset", "generate the optimal-trajectory training set");
  dataset->add_option("--nominal", nominal_path, "nominal.json to anchor the seed grid");

  CLI::App* train = app.add_subcommand("train", "fit the three guidance networks");
  train->add_option("--dataset", dataset_path, "dataset CSV (default <out>/dataset.csv)");
  train->add_option("--manifest", manifest_path,
                    "dataset manifest (default <out>/dataset_manifest.json)");
  train->add_flag("--ablation", train_ablation,
                  "also fit a raw-command baseline net for comparison");

  CLI::App* simulate =
      app.add_subcommand("simulate", "fly the closed loop under network guidance");
  simulate->add_option("--models", models_dir, "directory with the three model files");
  simulate->add_option("--case", which_case, "departure case: 1, 2, or robust");
  simulate->add_option("--x0", x0_spec, "explicit departure state 'r,theta,u,v'");
  simulate->add_option("--noise", noise,
                       "relative lightness-number noise amplitude (default: the configured "
                       "amplitude for --case robust, otherwise 0)");
  simulate->add_flag("--generalize", generalize,
                     "fly random departures from the configured box instead of one case");

  CLI::App* bench = app.add_subcommand("bench", "time the guidance law and the full solver");
  bench->add_option("--models", models_dir, "directory with the three model files");
  bench->add_option("-n,--calls", n_calls, "guidance calls to time");
  bench->add_flag("--with-shooting", with_shooting, "also time one full indirect solve");

  CLI::App* bubble = app.add_subcommand("bubble", "sample the thrust-acceleration locus");
  bubble->add_option("--beta-lo", beta_lo, "smallest lightness number");
  bubble->add_option("--beta-hi", beta_hi, "largest lightness number");
  bubble->add_option("--n-beta", n_beta, "number of lightness values");
  bubble->add_option("--n-alpha", n_alpha, "samples per curve");
  bubble->add_option("--phi", phi, "cone-angle half-range [rad]");

  // Global options (-c, -o, --si) may appear after the subcommand name.
  for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (nominal->parsed())
      return cmd_nominal(common, which_case, unconstrained_only, delta_override);
    if (dataset->parsed()) return cmd_dataset(common, nominal_path);
    if (train->parsed()) return cmd_train(common, dataset_path, manifest_path);
    if (simulate->parsed())
      return cmd_simulate(common, models_dir, which_case, x0_spec, noise, generalize);
    if (bench->parsed()) return cmd_bench(common, models_dir, n_calls, with_shooting);
    if (bubble->parsed()) return cmd_bubble(common, beta_lo, beta_hi, n_beta, n_alpha, phi);
  } catch (const cli::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    // Bad values that arrived through the config or the flags.
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRun;
  }
  return kExitConfig;
}
