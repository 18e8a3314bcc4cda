#include "sail/train.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace sail {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr int kChunk = 512;  // fixed Jacobian block height; part of the numeric contract

struct Net {
  std::vector<MatrixXd> W;  // [l]: n_out x n_in
  std::vector<VectorXd> b;
  std::vector<int> sizes;

  std::size_t n_params() const {
    std::size_t p = 0;
    for (std::size_t l = 0; l < W.size(); ++l) p += W[l].size() + b[l].size();
    return p;
  }
};

Net net_from_model(const MlpModel& m) {
  Net net;
  net.sizes = m.layer_sizes;
  const std::size_t L = m.layer_sizes.size() - 1;
  net.W.resize(L);
  net.b.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    const int n_out = m.layer_sizes[l + 1];
    const int n_in = m.layer_sizes[l];
    net.W[l].resize(n_out, n_in);
    for (int i = 0; i < n_out; ++i) {
      for (int j = 0; j < n_in; ++j) {
        net.W[l](i, j) = m.weights[l][static_cast<std::size_t>(i) * n_in + j];
      }
    }
    net.b[l] = Eigen::Map<const VectorXd>(m.biases[l].data(), n_out);
  }
  return net;
}

void net_into_model(const Net& net, MlpModel& m) {
  const std::size_t L = net.W.size();
  for (std::size_t l = 0; l < L; ++l) {
    const int n_out = net.sizes[l + 1];
    const int n_in = net.sizes[l];
    for (int i = 0; i < n_out; ++i) {
      for (int j = 0; j < n_in; ++j) {
        m.weights[l][static_cast<std::size_t>(i) * n_in + j] = net.W[l](i, j);
      }
    }
    Eigen::Map<VectorXd>(m.biases[l].data(), n_out) = net.b[l];
  }
}

VectorXd pack(const Net& net) {
  VectorXd theta(net.n_params());
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    for (int i = 0; i < net.W[l].rows(); ++i) {
      theta.segment(at, net.W[l].cols()) = net.W[l].row(i).transpose();
      at += net.W[l].cols();
    }
    theta.segment(at, net.b[l].size()) = net.b[l];
    at += net.b[l].size();
  }
  return theta;
}

void unpack(const VectorXd& theta, Net& net) {
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    for (int i = 0; i < net.W[l].rows(); ++i) {
      net.W[l].row(i) = theta.segment(at, net.W[l].cols()).transpose();
      at += net.W[l].cols();
    }
    net.b[l] = theta.segment(at, net.b[l].size());
    at += net.b[l].size();
  }
}

// Forward pass over a block of rows; fills hidden activations (logistic) and
// the linear output.
void forward_block(const Net& net, const MatrixXd& X, std::vector<MatrixXd>& acts,
                   VectorXd& yhat) {
  const std::size_t L = net.W.size();
  acts.resize(L);  // acts[l] holds the activation AFTER layer l (hidden only)
  const MatrixXd* in = &X;
  for (std::size_t l = 0; l < L; ++l) {
    MatrixXd Z = (*in) * net.W[l].transpose();
    Z.rowwise() += net.b[l].transpose();
    if (l + 1 < L) {
      acts[l] = (1.0 + (-Z.array()).exp()).inverse().matrix();
      in = &acts[l];
    } else {
      yhat = Z.col(0);
    }
  }
}

double mse_of(const Net& net, const MatrixXd& X, const VectorXd& y) {
  if (y.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  double sse = 0.0;
  std::vector<MatrixXd> acts;
  VectorXd yhat;
  for (Eigen::Index at = 0; at < X.rows(); at += kChunk) {
    const Eigen::Index c = std::min<Eigen::Index>(kChunk, X.rows() - at);
    forward_block(net, X.middleRows(at, c), acts, yhat);
    sse += (yhat - y.segment(at, c)).squaredNorm();
  }
  return sse / static_cast<double>(y.size());
}

// Accumulates the Gauss-Newton normal equations J^T J and J^T e over the
// training block in fixed-order chunks, so the floating-point result is
// identical run to run.
double accumulate_normal_eqs(const Net& net, const MatrixXd& X, const VectorXd& y,
                             MatrixXd& JtJ, VectorXd& Jte) {
  const std::size_t L = net.W.size();
  const Eigen::Index P = static_cast<Eigen::Index>(net.n_params());
  JtJ.setZero(P, P);
  Jte.setZero(P);
  double sse = 0.0;

  std::vector<MatrixXd> acts;
  std::vector<MatrixXd> G(L);
  VectorXd yhat;
  MatrixXd Jc;

  for (Eigen::Index at = 0; at < X.rows(); at += kChunk) {
    const Eigen::Index c = std::min<Eigen::Index>(kChunk, X.rows() - at);
    const MatrixXd Xc = X.middleRows(at, c);
    forward_block(net, Xc, acts, yhat);
    const VectorXd e = yhat - y.segment(at, c);
    sse += e.squaredNorm();

    // Output sensitivities back through the hidden stack.
    G[L - 1] = MatrixXd::Ones(c, 1);
    for (std::size_t l = L - 1; l >= 1; --l) {
      const MatrixXd& A = acts[l - 1];
      G[l - 1] = ((G[l] * net.W[l]).array() * A.array() * (1.0 - A.array())).matrix();
    }

    Jc.resize(c, P);
    Eigen::Index col = 0;
    for (std::size_t l = 0; l < L; ++l) {
      const MatrixXd& A_prev = l == 0 ? Xc : acts[l - 1];
      const int n_out = net.sizes[l + 1];
      const int n_in = net.sizes[l];
      for (int i = 0; i < n_out; ++i) {
        for (int j = 0; j < n_in; ++j) {
          Jc.col(col++) = G[l].col(i).cwiseProduct(A_prev.col(j));
        }
      }
      Jc.middleCols(col, n_out) = G[l];
      col += n_out;
    }

    JtJ.selfadjointView<Eigen::Lower>().rankUpdate(Jc.transpose(), 1.0);
    Jte.noalias() += Jc.transpose() * e;
  }
  return sse / static_cast<double>(y.size());
}

MatrixXd gather_rows(const std::vector<double>& x, int dim,
                     const std::vector<std::size_t>& idx, const NormStats& st) {
  MatrixXd M(static_cast<Eigen::Index>(idx.size()), dim);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    for (int j = 0; j < dim; ++j) {
      M(static_cast<Eigen::Index>(r), j) =
          (x[idx[r] * dim + j] - st.mean[j]) / st.stdev[j];
    }
  }
  return M;
}

VectorXd gather_targets(const std::vector<double>& y, const std::vector<std::size_t>& idx,
                        const NormStats& st) {
  VectorXd v(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    v(static_cast<Eigen::Index>(r)) = (y[idx[r]] - st.mean[0]) / st.stdev[0];
  }
  return v;
}

}  // namespace

TrainData make_train_data(const std::vector<DatasetRecord>& records, RegressionTarget target) {
  TrainData data;
  data.dim = target == RegressionTarget::tf ? 3 : 4;
  data.x.reserve(records.size() * data.dim);
  data.y.reserve(records.size());
  for (const DatasetRecord& rec : records) {
    data.x.push_back(rec.r);
    data.x.push_back(rec.u);
    data.x.push_back(rec.v);
    if (data.dim == 4) data.x.push_back(rec.tf);
    switch (target) {
      case RegressionTarget::tf:
        data.y.push_back(rec.tf);
        break;
      case RegressionTarget::alpha_pre:
        data.y.push_back(rec.alpha_pre);
        break;
      case RegressionTarget::lam_v:
        data.y.push_back(rec.lam_v);
        break;
      case RegressionTarget::alpha_raw:
        data.y.push_back(rec.alpha);
        break;
    }
  }
  return data;
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::epoch_limit:
      return "epoch-limit";
    case StopReason::loss_threshold:
      return "loss-threshold";
    case StopReason::early_stop:
      return "early-stop";
  }
  return "unknown";
}

std::pair<MlpModel, TrainReport> train_lm(const TrainData& data, const TrainHyper& hp,
                                          const std::string& manifest_hash) {
  if (data.dim <= 0 || data.x.size() != data.size() * data.dim || data.size() < 4) {
    throw std::invalid_argument("train_lm: bad or too-small training data");
  }

  Rng rng(hp.seed);

  // Deterministic shuffle, optional cap, then the three-way split.
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  if (hp.max_samples > 0 && order.size() > hp.max_samples) order.resize(hp.max_samples);

  const std::size_t n = order.size();
  const std::size_t n_train = std::max<std::size_t>(1, static_cast<std::size_t>(n * hp.train_frac));
  const std::size_t n_val = std::min(n - n_train, static_cast<std::size_t>(n * hp.val_frac));
  const std::size_t n_test = n - n_train - n_val;
  const std::vector<std::size_t> idx_train(order.begin(), order.begin() + n_train);
  const std::vector<std::size_t> idx_val(order.begin() + n_train, order.begin() + n_train + n_val);
  const std::vector<std::size_t> idx_test(order.begin() + n_train + n_val, order.end());

  // Normalization statistics come from the training split alone.
  std::vector<double> xtr_raw(n_train * data.dim);
  std::vector<double> ytr_raw(n_train);
  for (std::size_t r = 0; r < n_train; ++r) {
    for (int j = 0; j < data.dim; ++j) xtr_raw[r * data.dim + j] = data.x[idx_train[r] * data.dim + j];
    ytr_raw[r] = data.y[idx_train[r]];
  }
  const NormStats in_norm = compute_norm_stats(xtr_raw, data.dim);
  const NormStats out_norm = compute_norm_stats(ytr_raw, 1);

  const MatrixXd Xtr = gather_rows(data.x, data.dim, idx_train, in_norm);
  const VectorXd ytr = gather_targets(data.y, idx_train, out_norm);
  const MatrixXd Xval = gather_rows(data.x, data.dim, idx_val, in_norm);
  const VectorXd yval = gather_targets(data.y, idx_val, out_norm);
  const MatrixXd Xtest = gather_rows(data.x, data.dim, idx_test, in_norm);
  const VectorXd ytest = gather_targets(data.y, idx_test, out_norm);

  std::vector<int> sizes;
  sizes.push_back(data.dim);
  sizes.insert(sizes.end(), hp.hidden.begin(), hp.hidden.end());
  sizes.push_back(1);
  MlpModel model = make_mlp(sizes, rng);
  model.input_norm = in_norm;
  model.output_norm = out_norm;
  model.training_manifest_hash = manifest_hash;

  Net net = net_from_model(model);

  MatrixXd JtJ;
  VectorXd Jte;
  double mu = hp.mu0;

  TrainReport report;
  report.n_train = n_train;
  report.n_val = n_val;
  report.n_test = n_test;

  VectorXd theta = pack(net);
  VectorXd theta_best = theta;
  double best_val = n_val > 0 ? mse_of(net, Xval, yval) : std::numeric_limits<double>::infinity();
  int val_fails = 0;
  StopReason reason = StopReason::epoch_limit;

  Net trial = net;
  for (int epoch = 1; epoch <= hp.max_epochs; ++epoch) {
    report.epochs_run = epoch;
    const double mse_tr = accumulate_normal_eqs(net, Xtr, ytr, JtJ, Jte);
    if (mse_tr <= hp.loss_goal) {
      report.epochs_run = epoch - 1;
      reason = StopReason::loss_threshold;
      if (n_val == 0) theta_best = theta;
      break;
    }

    // Damped Gauss-Newton step; the damping grows until a step lowers the
    // training MSE or the budget mu_max is exhausted.
    bool stepped = false;
    while (mu <= hp.mu_max) {
      MatrixXd M = JtJ.selfadjointView<Eigen::Lower>();
      M.diagonal().array() += mu;
      const Eigen::LLT<MatrixXd> llt(M);
      if (llt.info() == Eigen::Success) {
        const VectorXd delta = llt.solve(-Jte);
        const VectorXd theta_try = theta + delta;
        unpack(theta_try, trial);
        const double mse_try = mse_of(trial, Xtr, ytr);
        if (std::isfinite(mse_try) && mse_try < mse_tr) {
          theta = theta_try;
          std::swap(net, trial);
          mu = std::max(mu * hp.mu_dec, 1e-20);
          stepped = true;
          break;
        }
      }
      mu *= hp.mu_inc;
    }
    if (!stepped) {
      reason = StopReason::early_stop;  // damping saturated; no descent direction left
      if (n_val == 0) theta_best = theta;
      break;
    }

    if (n_val > 0) {
      const double mse_v = mse_of(net, Xval, yval);
      if (mse_v <= best_val) {
        best_val = mse_v;
        theta_best = theta;
        val_fails = 0;
      } else if (++val_fails >= hp.patience) {
        reason = StopReason::early_stop;
        break;
      }
    } else {
      theta_best = theta;
    }
  }

  unpack(theta_best, net);
  net_into_model(net, model);
  report.stop_reason = reason;
  report.mse_train = mse_of(net, Xtr, ytr);
  report.mse_val = n_val > 0 ? mse_of(net, Xval, yval) : report.mse_train;
  report.mse_test = n_test > 0 ? mse_of(net, Xtest, ytest) : report.mse_train;
  return {std::move(model), report};
}

}  // namespace sail
