#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sail/artifacts.hpp"
#include "sail/mlp.hpp"

using namespace sail;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined
};

const fs::path& scratch_root() {
  static const fs::path root = [] {
    const fs::path p = fs::temp_directory_path() / "sailopt_cli_smoke";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path log = scratch_root() / ("log_" + std::to_string(counter++) + ".txt");
  const std::string cmd =
      std::string(SAILOPT_BIN) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  RunResult res;
  res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  res.output = read_file(log.string());
  return res;
}

// Single linear layer with zero weights: a constant-output network, enough to
// steer the guidance loop from a test.
MlpModel const_model(int n_in, double value) {
  MlpModel m;
  m.layer_sizes = {n_in, 1};
  m.weights = {std::vector<double>(static_cast<std::size_t>(n_in), 0.0)};
  m.biases = {{0.0}};
  m.input_norm.mean.assign(static_cast<std::size_t>(n_in), 0.0);
  m.input_norm.stdev.assign(static_cast<std::size_t>(n_in), 1.0);
  m.output_norm.mean = {value};
  m.output_norm.stdev = {1.0};
  return m;
}

// Writes a scriptable three-network stack and returns its directory.
fs::path write_stack(const std::string& name, double tf, double alpha_pre, double lam_v) {
  const fs::path dir = scratch_root() / name;
  fs::create_directories(dir);
  save_model(const_model(3, tf), (dir / "n_tf.json").string());
  save_model(const_model(4, alpha_pre), (dir / "n_alpha_pre.json").string());
  save_model(const_model(4, lam_v), (dir / "n_lam_v.json").string());
  return dir;
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("help lists every subcommand and exits cleanly") {
  const RunResult res = run_cli("--help");
  CHECK(res.exit_code == 0);
  for (const char* sub : {"nominal", "dataset", "train", "simulate", "bench", "bubble"}) {
    CHECK(res.output.find(sub) != std::string::npos);
  }
}

TEST_CASE("usage mistakes exit with the configuration code") {
  CHECK(run_cli("").exit_code == 3);
  CHECK(run_cli("no-such-command").exit_code == 3);
  CHECK(run_cli("bubble --no-such-flag").exit_code == 3);

  const fs::path bad = scratch_root() / "bad.cfg";
  {
    std::ofstream out(bad);
    out << "definitely.wrong = 1\n";
  }
  const RunResult res = run_cli("bubble -c " + bad.string());
  CHECK(res.exit_code == 3);
  CHECK(res.output.find("unknown key") != std::string::npos);

  const fs::path invalid = scratch_root() / "invalid.cfg";
  {
    std::ofstream out(invalid);
    out << "sail.beta = -1\n";
  }
  CHECK(run_cli("bubble -c " + invalid.string()).exit_code == 3);
}

TEST_CASE("the acceleration-locus export is complete and repeatable") {
  const fs::path out = scratch_root() / "bubble_a";
  const std::string args =
      "bubble -o " + out.string() + " --beta-lo 0.1 --beta-hi 0.2 --n-beta 3 --n-alpha 7";
  CHECK(run_cli(args).exit_code == 0);

  const std::string csv = read_file((out / "bubble.csv").string());
  CHECK(csv.rfind("beta,alpha_rad,a_u,a_v\n", 0) == 0);
  CHECK(count_lines(csv) == 1 + 3 * 7);

  // Re-running the same command must reproduce the same bytes.
  CHECK(run_cli(args).exit_code == 0);
  CHECK(read_file((out / "bubble.csv").string()) == csv);

  // The JSON companion carries the config hash and the body hash of the CSV.
  const std::string meta = read_file((out / "bubble.json").string());
  CHECK(meta.find("config_hash") != std::string::npos);
  CHECK(meta.find(fnv1a_hex(csv)) != std::string::npos);

  // SI output rescales columns, so the bytes must differ.
  const fs::path out_si = scratch_root() / "bubble_si";
  CHECK(run_cli("bubble --si -o " + out_si.string() +
                " --beta-lo 0.1 --beta-hi 0.2 --n-beta 3 --n-alpha 7")
            .exit_code == 0);
  const std::string si_csv = read_file((out_si / "bubble.csv").string());
  CHECK(si_csv.rfind("beta,alpha_rad,a_u,a_v\n", 0) == 0);
  CHECK(si_csv != csv);
}

TEST_CASE("the output directory obeys config < environment < flag precedence") {
  const fs::path cfg_dir = scratch_root() / "prec_cfg";
  const fs::path env_dir = scratch_root() / "prec_env";
  const fs::path flag_dir = scratch_root() / "prec_flag";
  const fs::path cfg = scratch_root() / "prec.cfg";
  {
    std::ofstream out(cfg);
    out << "run.out_dir = " << cfg_dir.string() << "\n";
  }
  const std::string bubble = "bubble --n-beta 1 --n-alpha 3 -c " + cfg.string();

  CHECK(run_cli(bubble).exit_code == 0);
  CHECK(fs::exists(cfg_dir / "bubble.csv"));

  REQUIRE(setenv("SAILOPT_OUT_DIR", env_dir.string().c_str(), 1) == 0);
  CHECK(run_cli(bubble).exit_code == 0);
  CHECK(fs::exists(env_dir / "bubble.csv"));

  CHECK(run_cli(bubble + " -o " + flag_dir.string()).exit_code == 0);
  CHECK(fs::exists(flag_dir / "bubble.csv"));
  REQUIRE(unsetenv("SAILOPT_OUT_DIR") == 0);
}

TEST_CASE("closed-loop runs write paired artifacts and meaningful exit codes") {
  // A stack whose predicted time is already below the stop rule: the flight
  // converges on the spot, exercising the full artifact path cheaply.
  const fs::path models = write_stack("stack_instant", 0.005, 0.2, -1.0);
  const fs::path out = scratch_root() / "sim_instant";
  const RunResult ok = run_cli("simulate --models " + models.string() + " --x0 1.3,0,0,0.9 -o " +
                               out.string());
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("converged") != std::string::npos);

  const std::string csv = read_file((out / "sim.csv").string());
  CHECK(csv.rfind("t,r,theta,u,v,alpha,tf_pred,beta_eff\n", 0) == 0);
  const std::string summary = read_file((out / "sim_summary.json").string());
  CHECK(summary.find("\"converged\": true") != std::string::npos);
  CHECK(summary.find("config_hash") != std::string::npos);
  CHECK(summary.find(fnv1a_hex(csv)) != std::string::npos);

  // Bad departure syntax is a usage error, even though models exist.
  CHECK(run_cli("simulate --models " + models.string() + " --x0 1,2,3 -o " + out.string())
            .exit_code == 3);
  CHECK(run_cli("simulate --models " + models.string() + " --case 9 -o " + out.string())
            .exit_code == 3);

  // Missing models are a failed run, not a usage error.
  CHECK(run_cli("simulate --models " + (scratch_root() / "nowhere").string() + " -o " +
                out.string())
            .exit_code == 2);
}

TEST_CASE("a flight that never converges is reported as a failed run") {
  const fs::path models = write_stack("stack_never", 9.0, 0.1, -1.0);
  const fs::path cfg = scratch_root() / "short.cfg";
  {
    std::ofstream out(cfg);
    out << "sim.t_cap = 0.05\n";
  }
  const fs::path out = scratch_root() / "sim_capped";
  const std::string args = "simulate --models " + models.string() + " --case robust -c " +
                           cfg.string() + " -o " + out.string();
  const RunResult res = run_cli(args);
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("time-capped") != std::string::npos);

  // Five intervals plus the final state, after the header.
  const std::string csv = read_file((out / "sim.csv").string());
  CHECK(count_lines(csv) == 1 + 5 + 1);

  // The robust case flies under seeded actuation noise: rerunning must still
  // reproduce the bytes exactly.
  CHECK(run_cli(args).exit_code == 2);
  CHECK(read_file((out / "sim.csv").string()) == csv);
  const std::string summary = read_file((out / "sim_summary.json").string());
  CHECK(summary.find("\"beta_noise\": 0.15") != std::string::npos);
}

TEST_CASE("guidance timing runs from canned models") {
  const fs::path models = write_stack("stack_bench", 5.0, 0.3, -1.0);
  const fs::path out = scratch_root() / "bench_out";
  const RunResult res =
      run_cli("bench --models " + models.string() + " -n 50 -o " + out.string());
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("50 calls") != std::string::npos);
  const std::string meta = read_file((out / "bench.json").string());
  CHECK(meta.find("\"n_calls\": 50") != std::string::npos);
  CHECK(meta.find("config_hash") != std::string::npos);
}

TEST_CASE("training without a dataset is a failed run") {
  const fs::path out = scratch_root() / "train_none";
  CHECK(run_cli("train -o " + out.string()).exit_code == 2);
}
