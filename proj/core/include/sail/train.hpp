#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sail/factory.hpp"
#include "sail/mlp.hpp"

namespace sail {

/// Row-major supervised regression set: n rows of dim features, one target
/// per row.
struct TrainData {
  int dim = 0;
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const { return y.size(); }
};

enum class StopReason { epoch_limit, loss_threshold, early_stop };

const char* to_string(StopReason r);

struct TrainHyper {
  std::vector<int> hidden{20, 20, 20};
  int max_epochs = 1000;
  /// Normalized-target train MSE at or below which training stops.
  double loss_goal = 1e-8;
  /// Consecutive epochs the validation MSE may sit above its running best.
  int patience = 6;
  double mu0 = 1e-3;
  double mu_inc = 10.0;
  double mu_dec = 0.1;
  double mu_max = 1e10;
  double train_frac = 0.70;
  double val_frac = 0.15;  ///< remainder of the split is the test share
  std::uint64_t seed = 7;
  /// Deterministic subsample cap applied before splitting; 0 keeps all rows.
  std::size_t max_samples = 0;
};

struct TrainReport {
  int epochs_run = 0;
  /// Normalized-target mean squared errors of the returned (best-validation)
  /// weights on the three splits.
  double mse_train = 0.0;
  double mse_val = 0.0;
  double mse_test = 0.0;
  StopReason stop_reason = StopReason::epoch_limit;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
};

/// Levenberg-Marquardt fit of a sigmoid MLP regressor. Inputs and targets are
/// z-scored with statistics of the training split; the damping factor grows
/// tenfold on each rejected step and shrinks tenfold on acceptance. The
/// weights returned are the best-validation snapshot. Bit-deterministic for
/// fixed data and hyperparameters.
std::pair<MlpModel, TrainReport> train_lm(const TrainData& data, const TrainHyper& hp = {},
                                          const std::string& manifest_hash = "");

/// Regression targets extractable from dataset records. tf uses the (r, u, v)
/// inputs; the others add the remaining flight time as a fourth input.
/// alpha_raw is the un-normalized command, kept for baseline comparisons.
enum class RegressionTarget { tf, alpha_pre, lam_v, alpha_raw };

TrainData make_train_data(const std::vector<DatasetRecord>& records, RegressionTarget target);

}  // namespace sail
