#include "sail/mlp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sail {

namespace {

using ordered_json = nlohmann::ordered_json;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

NormStats compute_norm_stats(std::span<const double> rows, int dim) {
  if (dim <= 0 || rows.size() % dim != 0 || rows.empty()) {
    throw std::invalid_argument("compute_norm_stats: bad matrix shape");
  }
  const std::size_t n = rows.size() / dim;
  NormStats st;
  st.mean.assign(dim, 0.0);
  st.stdev.assign(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) st.mean[j] += rows[i * dim + j];
  }
  for (int j = 0; j < dim; ++j) st.mean[j] /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < dim; ++j) {
      const double d = rows[i * dim + j] - st.mean[j];
      st.stdev[j] += d * d;
    }
  }
  for (int j = 0; j < dim; ++j) {
    st.stdev[j] = std::sqrt(st.stdev[j] / static_cast<double>(n));
    if (st.stdev[j] < 1e-12) st.stdev[j] = 1e-12;
  }
  return st;
}

std::size_t MlpModel::n_params() const {
  std::size_t p = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    p += static_cast<std::size_t>(layer_sizes[l + 1]) * layer_sizes[l] + layer_sizes[l + 1];
  }
  return p;
}

void MlpModel::validate() const {
  if (layer_sizes.size() < 2) throw std::invalid_argument("MlpModel: need >= 2 layers");
  const std::size_t L = layer_sizes.size() - 1;
  if (weights.size() != L || biases.size() != L) {
    throw std::invalid_argument("MlpModel: layer count mismatch");
  }
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t rows = layer_sizes[l + 1];
    const std::size_t cols = layer_sizes[l];
    if (weights[l].size() != rows * cols || biases[l].size() != rows) {
      throw std::invalid_argument("MlpModel: weight shape mismatch at layer " +
                                  std::to_string(l));
    }
  }
  if (input_norm.dim() != layer_sizes.front() || output_norm.dim() != layer_sizes.back()) {
    throw std::invalid_argument("MlpModel: normalization dimension mismatch");
  }
  if (activation != "logistic") {
    throw std::invalid_argument("MlpModel: unsupported activation " + activation);
  }
}

double MlpModel::forward_normalized(std::span<const double> xz) const {
  if (static_cast<int>(xz.size()) != input_dim() || output_dim() != 1) {
    throw std::invalid_argument("MlpModel::forward_normalized: dimension mismatch");
  }
  std::vector<double> a(xz.begin(), xz.end());
  std::vector<double> z;
  const std::size_t L = layer_sizes.size() - 1;
  for (std::size_t l = 0; l < L; ++l) {
    const int n_out = layer_sizes[l + 1];
    const int n_in = layer_sizes[l];
    z.assign(n_out, 0.0);
    const double* W = weights[l].data();
    for (int i = 0; i < n_out; ++i) {
      double acc = biases[l][i];
      const double* row = W + static_cast<std::size_t>(i) * n_in;
      for (int j = 0; j < n_in; ++j) acc += row[j] * a[j];
      z[i] = acc;
    }
    if (l + 1 < L) {
      for (int i = 0; i < n_out; ++i) z[i] = logistic(z[i]);
    }
    a = z;
  }
  return a[0];
}

std::vector<double> param_gradient(const MlpModel& model, std::span<const double> xz) {
  model.validate();
  if (static_cast<int>(xz.size()) != model.input_dim() || model.output_dim() != 1) {
    throw std::invalid_argument("param_gradient: dimension mismatch");
  }
  const std::size_t L = model.layer_sizes.size() - 1;

  // Forward pass keeping every activation; acts[0] is the input itself.
  std::vector<std::vector<double>> acts(L + 1);
  acts[0].assign(xz.begin(), xz.end());
  for (std::size_t l = 0; l < L; ++l) {
    const int n_out = model.layer_sizes[l + 1];
    const int n_in = model.layer_sizes[l];
    acts[l + 1].assign(n_out, 0.0);
    for (int i = 0; i < n_out; ++i) {
      double acc = model.biases[l][i];
      const double* row = model.weights[l].data() + static_cast<std::size_t>(i) * n_in;
      for (int j = 0; j < n_in; ++j) acc += row[j] * acts[l][j];
      acts[l + 1][i] = l + 1 < L ? logistic(acc) : acc;
    }
  }

  // Reverse pass: g[i] = d(output)/d(pre-activation of unit i in layer l).
  std::vector<std::vector<double>> g(L);
  g[L - 1].assign(1, 1.0);
  for (std::size_t l = L - 1; l >= 1; --l) {
    const int n_out = model.layer_sizes[l + 1];
    const int n_in = model.layer_sizes[l];
    g[l - 1].assign(n_in, 0.0);
    for (int j = 0; j < n_in; ++j) {
      double acc = 0.0;
      for (int i = 0; i < n_out; ++i) {
        acc += g[l][i] * model.weights[l][static_cast<std::size_t>(i) * n_in + j];
      }
      const double a = acts[l][j];
      g[l - 1][j] = acc * a * (1.0 - a);
    }
  }

  std::vector<double> grad;
  grad.reserve(model.n_params());
  for (std::size_t l = 0; l < L; ++l) {
    const int n_out = model.layer_sizes[l + 1];
    const int n_in = model.layer_sizes[l];
    for (int i = 0; i < n_out; ++i) {
      for (int j = 0; j < n_in; ++j) grad.push_back(g[l][i] * acts[l][j]);
    }
    for (int i = 0; i < n_out; ++i) grad.push_back(g[l][i]);
  }
  return grad;
}

double MlpModel::forward(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_dim()) {
    throw std::invalid_argument("MlpModel::forward: dimension mismatch");
  }
  std::vector<double> xz(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    xz[j] = (x[j] - input_norm.mean[j]) / input_norm.stdev[j];
  }
  const double yz = forward_normalized(xz);
  return yz * output_norm.stdev[0] + output_norm.mean[0];
}

MlpModel make_mlp(const std::vector<int>& layer_sizes, Rng& rng) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("make_mlp: need >= 2 layers");
  MlpModel m;
  m.layer_sizes = layer_sizes;
  const std::size_t L = layer_sizes.size() - 1;
  m.weights.resize(L);
  m.biases.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    const int n_out = layer_sizes[l + 1];
    const int n_in = layer_sizes[l];
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_in));
    m.weights[l].resize(static_cast<std::size_t>(n_out) * n_in);
    m.biases[l].resize(n_out);
    for (double& w : m.weights[l]) w = rng.uniform(-scale, scale);
    for (double& b : m.biases[l]) b = rng.uniform(-scale, scale);
  }
  m.input_norm.mean.assign(layer_sizes.front(), 0.0);
  m.input_norm.stdev.assign(layer_sizes.front(), 1.0);
  m.output_norm.mean.assign(layer_sizes.back(), 0.0);
  m.output_norm.stdev.assign(layer_sizes.back(), 1.0);
  return m;
}

std::string model_to_json(const MlpModel& model) {
  ordered_json j;
  j["schema_version"] = 1;
  j["layer_sizes"] = model.layer_sizes;
  j["weights"] = model.weights;
  j["biases"] = model.biases;
  j["input_norm"] = {{"mean", model.input_norm.mean}, {"std", model.input_norm.stdev}};
  j["output_norm"] = {{"mean", model.output_norm.mean}, {"std", model.output_norm.stdev}};
  j["activation"] = model.activation;
  j["training_manifest_hash"] = model.training_manifest_hash;
  return j.dump(2) + "\n";
}

MlpModel model_from_json(const std::string& text) {
  const ordered_json j = ordered_json::parse(text);
  if (j.at("schema_version").get<int>() != 1) {
    throw std::invalid_argument("model_from_json: unsupported schema_version");
  }
  MlpModel m;
  j.at("layer_sizes").get_to(m.layer_sizes);
  j.at("weights").get_to(m.weights);
  j.at("biases").get_to(m.biases);
  j.at("input_norm").at("mean").get_to(m.input_norm.mean);
  j.at("input_norm").at("std").get_to(m.input_norm.stdev);
  j.at("output_norm").at("mean").get_to(m.output_norm.mean);
  j.at("output_norm").at("std").get_to(m.output_norm.stdev);
  m.activation = j.at("activation").get<std::string>();
  m.training_manifest_hash = j.value("training_manifest_hash", "");
  m.validate();
  return m;
}

void save_model(const MlpModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out << model_to_json(model);
  if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace sail
