#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <string>

#include "config.hpp"

using namespace sail;
using cli::ConfigError;
using cli::RunConfig;

TEST_CASE("an empty config yields the reference defaults") {
  const RunConfig cfg = cli::parse_config("");
  CHECK(cfg.sail.beta == 0.16892);
  CHECK(cfg.sail.phi_max == doctest::Approx(std::numbers::pi / 3.0).epsilon(1e-15));
  CHECK(cfg.sail.delta == 1e-3);
  CHECK(cfg.transfer.rf == 1.524);
  CHECK(cfg.transfer.x0.r == 1.0);
  CHECK(cfg.x0_case2.r == 1.05);
  CHECK(cfg.x0_case2.u == 0.15);
  CHECK(cfg.x0_robust.theta == doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-15));
  CHECK(cfg.dataset.n_lam_r == 60);
  CHECK(cfg.dataset.n_lam_u == 60);
  CHECK(cfg.train.hidden == std::vector<int>{20, 20, 20});
  CHECK(cfg.train.max_epochs == 1000);
  CHECK(cfg.n_starts == 64);
  CHECK(cfg.sim.control_dt == 0.01);
  CHECK(cfg.sim.stop_tf == 0.01);
  CHECK(cfg.noise_amplitude == 0.15);
  CHECK(cfg.gen.n_trials == 30);
  CHECK(cfg.seed_multistart == 2027);
  CHECK(cfg.out_dir == "out");
}

TEST_CASE("typed keys override individual fields") {
  const RunConfig cfg = cli::parse_config(
      "sail.beta = 0.2\n"
      "sail.delta = 0\n"
      "transfer.x0_v = 1.03\n"
      "dataset.n_lam_r = 13\n"
      "dataset.d_lam_r_min = -5.5\n"
      "train.hidden = 10, 5, 2\n"
      "train.max_samples = 4000\n"
      "train.train_frac = 0.8\n"
      "seeds.noise = 12345\n"
      "run.out_dir = /tmp/elsewhere\n"
      "run.trace_samples = 99\n");
  CHECK(cfg.sail.beta == 0.2);
  CHECK(cfg.sail.delta == 0.0);
  CHECK(cfg.transfer.x0.v == 1.03);
  CHECK(cfg.dataset.n_lam_r == 13);
  CHECK(cfg.dataset.d_lam_r_range[0] == -5.5);
  CHECK(cfg.train.hidden == std::vector<int>{10, 5, 2});
  CHECK(cfg.train.max_samples == 4000);
  CHECK(cfg.train.train_frac == 0.8);
  CHECK(cfg.seed_noise == 12345);
  CHECK(cfg.out_dir == "/tmp/elsewhere");
  CHECK(cfg.trace_samples == 99);
}

TEST_CASE("comments, blank lines, and stray spacing are tolerated") {
  const RunConfig cfg = cli::parse_config(
      "# full-line comment\n"
      "\n"
      "   \t  \n"
      "  sail.beta=0.19   # trailing comment\n"
      "\tsim.t_cap   =   12.5\t\n"
      "# seeds.noise = 1  (commented out, must not apply)\n");
  CHECK(cfg.sail.beta == 0.19);
  CHECK(cfg.sim.t_cap == 12.5);
  CHECK(cfg.seed_noise == 99);
}

TEST_CASE("malformed config lines are rejected with the offending line") {
  CHECK_THROWS_AS(cli::parse_config("sail.beta 0.2\n"), ConfigError);
  CHECK_THROWS_AS(cli::parse_config("no.such.key = 1\n"), ConfigError);
  CHECK_THROWS_AS(cli::parse_config("sail.beta = fast\n"), ConfigError);
  CHECK_THROWS_AS(cli::parse_config("sail.beta = 0.2extra\n"), ConfigError);
  CHECK_THROWS_AS(cli::parse_config("dataset.n_lam_r = 12.5\n"), ConfigError);
  CHECK_THROWS_AS(cli::parse_config("seeds.noise = -4\n"), ConfigError);
  CHECK_THROWS_AS(cli::parse_config("train.hidden = \n"), ConfigError);
  CHECK_THROWS_AS(cli::parse_config("train.hidden = 20,,20\n"), ConfigError);

  try {
    cli::parse_config("sail.beta = 0.2\nwhat.is.this = 1\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("what.is.this") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
  }
}

TEST_CASE("out-of-range physics values are config errors, not crashes") {
  CHECK_THROWS_AS(cli::parse_config("sail.beta = -0.1\n"), ConfigError);
  CHECK_THROWS_AS(cli::parse_config("sail.beta = 0\n"), ConfigError);
  CHECK_THROWS_AS(cli::parse_config("sail.phi_max = 1.6\n"), ConfigError);
  CHECK_THROWS_AS(cli::parse_config("sail.delta = -1e-3\n"), ConfigError);
}

TEST_CASE("canonical serialization is a fixed point of parsing") {
  const RunConfig def;
  const std::string canon = cli::canonical_config(def);
  CHECK(cli::canonical_config(cli::parse_config(canon)) == canon);

  // Same fixed point for a config that touches every value type.
  const RunConfig tweaked = cli::parse_config(
      "sail.delta = 0\n"
      "train.hidden = 7,3\n"
      "seeds.timing = 5\n"
      "run.out_dir = somewhere/else\n"
      "gen.box_v_hi = 1.25\n");
  const std::string canon2 = cli::canonical_config(tweaked);
  CHECK(cli::canonical_config(cli::parse_config(canon2)) == canon2);
  CHECK(canon2 != canon);

  // Every line of the canonical form is itself a parsable key = value line.
  std::size_t lines = 0;
  for (std::size_t pos = 0; pos < canon.size();) {
    const std::size_t eol = canon.find('\n', pos);
    REQUIRE(eol != std::string::npos);
    CHECK(canon.substr(pos, eol - pos).find(" = ") != std::string::npos);
    pos = eol + 1;
    ++lines;
  }
  CHECK(lines > 50);  // one line per key, nothing silently dropped
}

TEST_CASE("config hashes identify the numeric inputs of a run") {
  const RunConfig def;
  const std::string h = cli::config_hash(def);
  CHECK(h.size() == 16);
  for (char c : h) CHECK(std::isxdigit(static_cast<unsigned char>(c)));
  CHECK(cli::config_hash(def) == h);  // stable across calls

  // The output directory is where artifacts land, not what they contain.
  RunConfig moved = def;
  moved.out_dir = "another/place";
  CHECK(cli::config_hash(moved) == h);

  RunConfig changed = def;
  changed.sail.beta = 0.17;
  CHECK(cli::config_hash(changed) != h);

  RunConfig reseeded = def;
  reseeded.seed_train_tf = 999;
  CHECK(cli::config_hash(reseeded) != h);
}

TEST_CASE("config files parse like inline text and missing files throw") {
  const std::string path = "test_config_tmp.cfg";
  {
    std::ofstream out(path);
    out << "sail.beta = 0.21\n# comment\nsim.control_dt = 0.02\n";
  }
  const RunConfig cfg = cli::parse_config_file(path);
  CHECK(cfg.sail.beta == 0.21);
  CHECK(cfg.sim.control_dt == 0.02);
  std::remove(path.c_str());

  CHECK_THROWS(cli::parse_config_file("definitely/not/here.cfg"));
}
