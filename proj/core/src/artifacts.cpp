#include "sail/artifacts.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sail {

namespace {

void append_g17(std::string& out, double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  out += buf;
}

double parse_double(const std::string& tok) {
  std::size_t pos = 0;
  const double v = std::stod(tok, &pos);
  if (pos != tok.size()) throw std::runtime_error("parse_dataset_csv: bad number " + tok);
  return v;
}

}  // namespace

std::string format_g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

UnitScales UnitScales::si() {
  return {units::tu_s, units::au_m, units::speed_ms, units::speed_ms / units::tu_s};
}

std::string trace_csv(const TrajectoryTrace& trace, const UnitScales& u) {
  std::string out = "t,r,theta,u,v,lam_r,lam_u,lam_v,alpha\n";
  for (std::size_t i = 0; i < trace.t.size(); ++i) {
    append_g17(out, trace.t[i] * u.time);
    out += ',';
    append_g17(out, trace.states[i].r * u.length);
    out += ',';
    append_g17(out, trace.states[i].theta);
    out += ',';
    append_g17(out, trace.states[i].u * u.speed);
    out += ',';
    append_g17(out, trace.states[i].v * u.speed);
    out += ',';
    append_g17(out, trace.costates[i].lam_r);
    out += ',';
    append_g17(out, trace.costates[i].lam_u);
    out += ',';
    append_g17(out, trace.costates[i].lam_v);
    out += ',';
    append_g17(out, trace.alpha[i]);
    out += '\n';
  }
  return out;
}

std::string dataset_csv(const std::vector<DatasetRecord>& records) {
  std::string out = "r,u,v,tf,alpha,alpha_pre,lam_v,traj_id,jump_flag\n";
  for (const DatasetRecord& rec : records) {
    append_g17(out, rec.r);
    out += ',';
    append_g17(out, rec.u);
    out += ',';
    append_g17(out, rec.v);
    out += ',';
    append_g17(out, rec.tf);
    out += ',';
    append_g17(out, rec.alpha);
    out += ',';
    append_g17(out, rec.alpha_pre);
    out += ',';
    append_g17(out, rec.lam_v);
    out += ',';
    out += std::to_string(rec.traj_id);
    out += ',';
    out += rec.jump_flag ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::vector<DatasetRecord> parse_dataset_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "r,u,v,tf,alpha,alpha_pre,lam_v,traj_id,jump_flag") {
    throw std::runtime_error("parse_dataset_csv: missing or unexpected header");
  }
  std::vector<DatasetRecord> records;
  std::vector<std::string> tok;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    tok.clear();
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      tok.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (tok.size() != 9) throw std::runtime_error("parse_dataset_csv: bad column count");
    DatasetRecord rec;
    rec.r = parse_double(tok[0]);
    rec.u = parse_double(tok[1]);
    rec.v = parse_double(tok[2]);
    rec.tf = parse_double(tok[3]);
    rec.alpha = parse_double(tok[4]);
    rec.alpha_pre = parse_double(tok[5]);
    rec.lam_v = parse_double(tok[6]);
    rec.traj_id = static_cast<std::uint32_t>(std::stoul(tok[7]));
    rec.jump_flag = tok[8] == "1";
    records.push_back(rec);
  }
  return records;
}

std::string bubble_csv(const std::vector<BubbleSample>& samples, const UnitScales& u) {
  std::string out = "beta,alpha_rad,a_u,a_v\n";
  for (const BubbleSample& s : samples) {
    append_g17(out, s.beta);
    out += ',';
    append_g17(out, s.alpha);
    out += ',';
    append_g17(out, s.a_u * u.accel);
    out += ',';
    append_g17(out, s.a_v * u.accel);
    out += '\n';
  }
  return out;
}

std::string sim_csv(const SimResult& result, const UnitScales& u) {
  std::string out = "t,r,theta,u,v,alpha,tf_pred,beta_eff\n";
  const auto row = [&](double t, const FlightState& x, double alpha, double tf_pred,
                       double beta_eff) {
    append_g17(out, t * u.time);
    out += ',';
    append_g17(out, x.r * u.length);
    out += ',';
    append_g17(out, x.theta);
    out += ',';
    append_g17(out, x.u * u.speed);
    out += ',';
    append_g17(out, x.v * u.speed);
    out += ',';
    append_g17(out, alpha);
    out += ',';
    append_g17(out, tf_pred * u.time);
    out += ',';
    append_g17(out, beta_eff);
    out += '\n';
  };
  for (const SimStep& s : result.steps) row(s.t, s.x, s.alpha, s.tf_pred, s.beta_eff);
  if (!result.steps.empty()) {
    const SimStep& last = result.steps.back();
    row(result.elapsed, result.final_state, last.alpha, last.tf_pred, last.beta_eff);
  }
  return out;
}

std::string dataset_manifest_json(const DatasetStats& stats, const DatasetOptions& opt,
                                  const SailConfig& cfg, double lam_rf, double lam_uf,
                                  std::string_view config_hash, std::string_view csv_hash) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["config_hash"] = std::string(config_hash);
  j["generation"] = {
      {"lam_rf", lam_rf},
      {"lam_uf", lam_uf},
      {"beta", cfg.beta},
      {"phi_max", cfg.phi_max},
      {"delta", cfg.delta},
      {"r0", opt.r0},
      {"tf_max", opt.tf_max},
      {"dtau", opt.propagate.dtau},
      {"radius_filter", opt.radius_filter},
      {"n_lam_r", opt.n_lam_r},
      {"n_lam_u", opt.n_lam_u},
      {"d_lam_r_range", opt.d_lam_r_range},
      {"d_lam_u_range", opt.d_lam_u_range},
  };
  j["counts"] = {
      {"seeds", stats.n_seeds},
      {"accepted", stats.n_accepted},
      {"rejected_radius", stats.n_rejected_radius},
      {"rejected_multijump", stats.n_rejected_multijump},
      {"rejected_infeasible", stats.n_rejected_infeasible},
      {"jump_trajectories", stats.n_jump_trajectories},
      {"records", stats.n_records},
  };
  j["content_hash"] = std::string(csv_hash);
  return j.dump(2) + "\n";
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_file: cannot open " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write_file: write failed for " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_file: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sail
