#include "config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "sail/artifacts.hpp"

namespace sail::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for " + key + ": '" + v + "'");
  }
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  std::int64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError("config: bad integer value for " + key + ": '" + v + "'");
  }
  return x;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError("config: bad seed value for " + key + ": '" + v + "'");
  }
  return x;
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) throw ConfigError("config: empty list element in " + key);
    out.push_back(static_cast<int>(to_int(key, tok)));
  }
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

#define SET_D(field) \
  [](RunConfig& c, const std::string& k, const std::string& v) { c.field = to_double(k, v); }
#define SET_I(field) \
  [](RunConfig& c, const std::string& k, const std::string& v) { \
    c.field = static_cast<int>(to_int(k, v));                    \
  }
#define SET_U(field) \
  [](RunConfig& c, const std::string& k, const std::string& v) { c.field = to_uint(k, v); }
#define SET_SZ(field) \
  [](RunConfig& c, const std::string& k, const std::string& v) { \
    c.field = static_cast<std::size_t>(to_uint(k, v));           \
  }

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"sail.beta", SET_D(sail.beta)},
      {"sail.phi_max", SET_D(sail.phi_max)},
      {"sail.delta", SET_D(sail.delta)},
      {"transfer.rf", SET_D(transfer.rf)},
      {"transfer.x0_r", SET_D(transfer.x0.r)},
      {"transfer.x0_theta", SET_D(transfer.x0.theta)},
      {"transfer.x0_u", SET_D(transfer.x0.u)},
      {"transfer.x0_v", SET_D(transfer.x0.v)},
      {"transfer.case2_r", SET_D(x0_case2.r)},
      {"transfer.case2_theta", SET_D(x0_case2.theta)},
      {"transfer.case2_u", SET_D(x0_case2.u)},
      {"transfer.case2_v", SET_D(x0_case2.v)},
      {"transfer.robust_r", SET_D(x0_robust.r)},
      {"transfer.robust_theta", SET_D(x0_robust.theta)},
      {"transfer.robust_u", SET_D(x0_robust.u)},
      {"transfer.robust_v", SET_D(x0_robust.v)},
      {"dataset.n_lam_r", SET_I(dataset.n_lam_r)},
      {"dataset.n_lam_u", SET_I(dataset.n_lam_u)},
      {"dataset.d_lam_r_min", SET_D(dataset.d_lam_r_range[0])},
      {"dataset.d_lam_r_max", SET_D(dataset.d_lam_r_range[1])},
      {"dataset.d_lam_u_min", SET_D(dataset.d_lam_u_range[0])},
      {"dataset.d_lam_u_max", SET_D(dataset.d_lam_u_range[1])},
      {"dataset.r0", SET_D(dataset.r0)},
      {"dataset.tf_max", SET_D(dataset.tf_max)},
      {"dataset.radius_filter", SET_D(dataset.radius_filter)},
      {"dataset.dtau", SET_D(dataset.propagate.dtau)},
      {"train.hidden",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.hidden = to_int_list(k, v);
       }},
      {"train.max_epochs", SET_I(train.max_epochs)},
      {"train.loss_goal", SET_D(train.loss_goal)},
      {"train.patience", SET_I(train.patience)},
      {"train.max_samples", SET_SZ(train.max_samples)},
      {"train.train_frac", SET_D(train.train_frac)},
      {"train.val_frac", SET_D(train.val_frac)},
      {"shooting.n_starts", SET_I(n_starts)},
      {"shooting.phi_steps", SET_I(phi_steps)},
      {"sim.control_dt", SET_D(sim.control_dt)},
      {"sim.stop_tf", SET_D(sim.stop_tf)},
      {"sim.t_cap", SET_D(sim.t_cap)},
      {"sim.r_guard_lo", SET_D(sim.r_guard[0])},
      {"sim.r_guard_hi", SET_D(sim.r_guard[1])},
      {"noise.amplitude", SET_D(noise_amplitude)},
      {"gen.n_trials", SET_I(gen.n_trials)},
      {"gen.success_tol", SET_D(gen.success_tol)},
      {"gen.box_r_lo", SET_D(gen.box.r[0])},
      {"gen.box_r_hi", SET_D(gen.box.r[1])},
      {"gen.box_theta_lo", SET_D(gen.box.theta[0])},
      {"gen.box_theta_hi", SET_D(gen.box.theta[1])},
      {"gen.box_u_lo", SET_D(gen.box.u[0])},
      {"gen.box_u_hi", SET_D(gen.box.u[1])},
      {"gen.box_v_lo", SET_D(gen.box.v[0])},
      {"gen.box_v_hi", SET_D(gen.box.v[1])},
      {"seeds.multistart", SET_U(seed_multistart)},
      {"seeds.train_tf", SET_U(seed_train_tf)},
      {"seeds.train_alpha_pre", SET_U(seed_train_alpha_pre)},
      {"seeds.train_lam_v", SET_U(seed_train_lam_v)},
      {"seeds.noise", SET_U(seed_noise)},
      {"seeds.generalization", SET_U(seed_generalization)},
      {"seeds.timing", SET_U(seed_timing)},
      {"run.out_dir",
       [](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
      {"run.trace_samples", SET_I(trace_samples)},
  };
  return table;
}

#undef SET_D
#undef SET_I
#undef SET_U
#undef SET_SZ

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("config: unknown key '" + key + "' on line " + std::to_string(lineno));
    }
    it->second(cfg, key, value);
  }
  try {
    cfg.sail.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  return parse_config(read_file(path));
}

std::string canonical_config(const RunConfig& c) {
  std::string out;
  const auto kv = [&out](const std::string& key, const std::string& val) {
    out += key;
    out += " = ";
    out += val;
    out += '\n';
  };
  const auto kd = [&](const std::string& key, double v) { kv(key, format_g17(v)); };
  const auto ki = [&](const std::string& key, std::int64_t v) { kv(key, std::to_string(v)); };
  const auto ku = [&](const std::string& key, std::uint64_t v) { kv(key, std::to_string(v)); };

  kd("sail.beta", c.sail.beta);
  kd("sail.phi_max", c.sail.phi_max);
  kd("sail.delta", c.sail.delta);
  kd("transfer.rf", c.transfer.rf);
  kd("transfer.x0_r", c.transfer.x0.r);
  kd("transfer.x0_theta", c.transfer.x0.theta);
  kd("transfer.x0_u", c.transfer.x0.u);
  kd("transfer.x0_v", c.transfer.x0.v);
  kd("transfer.case2_r", c.x0_case2.r);
  kd("transfer.case2_theta", c.x0_case2.theta);
  kd("transfer.case2_u", c.x0_case2.u);
  kd("transfer.case2_v", c.x0_case2.v);
  kd("transfer.robust_r", c.x0_robust.r);
  kd("transfer.robust_theta", c.x0_robust.theta);
  kd("transfer.robust_u", c.x0_robust.u);
  kd("transfer.robust_v", c.x0_robust.v);
  ki("dataset.n_lam_r", c.dataset.n_lam_r);
  ki("dataset.n_lam_u", c.dataset.n_lam_u);
  kd("dataset.d_lam_r_min", c.dataset.d_lam_r_range[0]);
  kd("dataset.d_lam_r_max", c.dataset.d_lam_r_range[1]);
  kd("dataset.d_lam_u_min", c.dataset.d_lam_u_range[0]);
  kd("dataset.d_lam_u_max", c.dataset.d_lam_u_range[1]);
  kd("dataset.r0", c.dataset.r0);
  kd("dataset.tf_max", c.dataset.tf_max);
  kd("dataset.radius_filter", c.dataset.radius_filter);
  kd("dataset.dtau", c.dataset.propagate.dtau);
  {
    std::string hidden;
    for (std::size_t i = 0; i < c.train.hidden.size(); ++i) {
      if (i > 0) hidden += ',';
      hidden += std::to_string(c.train.hidden[i]);
    }
    kv("train.hidden", hidden);
  }
  ki("train.max_epochs", c.train.max_epochs);
  kd("train.loss_goal", c.train.loss_goal);
  ki("train.patience", c.train.patience);
  ku("train.max_samples", c.train.max_samples);
  kd("train.train_frac", c.train.train_frac);
  kd("train.val_frac", c.train.val_frac);
  ki("shooting.n_starts", c.n_starts);
  ki("shooting.phi_steps", c.phi_steps);
  kd("sim.control_dt", c.sim.control_dt);
  kd("sim.stop_tf", c.sim.stop_tf);
  kd("sim.t_cap", c.sim.t_cap);
  kd("sim.r_guard_lo", c.sim.r_guard[0]);
  kd("sim.r_guard_hi", c.sim.r_guard[1]);
  kd("noise.amplitude", c.noise_amplitude);
  ki("gen.n_trials", c.gen.n_trials);
  kd("gen.success_tol", c.gen.success_tol);
  kd("gen.box_r_lo", c.gen.box.r[0]);
  kd("gen.box_r_hi", c.gen.box.r[1]);
  kd("gen.box_theta_lo", c.gen.box.theta[0]);
  kd("gen.box_theta_hi", c.gen.box.theta[1]);
  kd("gen.box_u_lo", c.gen.box.u[0]);
  kd("gen.box_u_hi", c.gen.box.u[1]);
  kd("gen.box_v_lo", c.gen.box.v[0]);
  kd("gen.box_v_hi", c.gen.box.v[1]);
  ku("seeds.multistart", c.seed_multistart);
  ku("seeds.train_tf", c.seed_train_tf);
  ku("seeds.train_alpha_pre", c.seed_train_alpha_pre);
  ku("seeds.train_lam_v", c.seed_train_lam_v);
  ku("seeds.noise", c.seed_noise);
  ku("seeds.generalization", c.seed_generalization);
  ku("seeds.timing", c.seed_timing);
  kv("run.out_dir", c.out_dir);
  ki("run.trace_samples", c.trace_samples);
  return out;
}

std::string config_hash(const RunConfig& cfg) {
  // The output directory is deployment detail, not an input of the numbers.
  RunConfig c = cfg;
  c.out_dir = "";
  return fnv1a_hex(canonical_config(c));
}

}  // namespace sail::cli
