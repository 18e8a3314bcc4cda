#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "sail/train.hpp"

using namespace sail;

namespace {

TrainData linear_data(int n) {
  TrainData d;
  d.dim = 1;
  for (int i = 0; i < n; ++i) {
    const double x = 0.01 * i;
    d.x.push_back(x);
    d.y.push_back(2.0 * x);
  }
  return d;
}

TrainData sine_data(int n) {
  TrainData d;
  d.dim = 1;
  for (int i = 0; i < n; ++i) {
    const double x = std::numbers::pi * i / (n - 1.0);
    d.x.push_back(x);
    d.y.push_back(std::sin(x));
  }
  return d;
}

}  // namespace

TEST_CASE("a linear-capacity model fits a linear law to machine precision") {
  TrainHyper hp;
  hp.hidden = {};  // single affine layer
  hp.loss_goal = 1e-12;
  const auto [model, report] = train_lm(linear_data(200), hp);
  CHECK(report.stop_reason == StopReason::loss_threshold);
  CHECK(report.epochs_run <= 5);
  CHECK(report.mse_train <= 1e-12);
  CHECK(report.mse_val <= 1e-12);

  // The fit is y = 2x in physical units.
  CHECK(model.forward(std::array{0.725}) == doctest::Approx(1.45).epsilon(1e-9));
  CHECK(model.forward(std::array{1.37}) == doctest::Approx(2.74).epsilon(1e-9));
}

TEST_CASE("sine regression reaches the desk-scale validation target") {
  TrainHyper hp;
  hp.max_epochs = 60;
  const auto [model, report] = train_lm(sine_data(1000), hp);
  CHECK(report.mse_val <= 1e-6);
  CHECK(report.mse_test <= 1e-6);
  CHECK(report.mse_train <= 1e-6);
  CHECK(report.n_train == 700);
  CHECK(report.n_val == 150);
  CHECK(report.n_test == 150);

  for (const double x : {0.3, 1.1, 2.4, 2.9}) {
    CHECK(model.forward(std::array{x}) == doctest::Approx(std::sin(x)).epsilon(2e-3));
  }
}

TEST_CASE("training is bit-deterministic for fixed data and hyperparameters") {
  TrainHyper hp;
  hp.hidden = {8};
  hp.max_epochs = 25;
  const auto [ma, ra] = train_lm(sine_data(300), hp);
  const auto [mb, rb] = train_lm(sine_data(300), hp);

  CHECK(ra.epochs_run == rb.epochs_run);
  CHECK(ra.stop_reason == rb.stop_reason);
  CHECK(ra.mse_train == rb.mse_train);
  CHECK(ra.mse_val == rb.mse_val);
  CHECK(ra.mse_test == rb.mse_test);
  CHECK(model_to_json(ma) == model_to_json(mb));

  // A different seed trains a different network.
  TrainHyper hp2 = hp;
  hp2.seed = hp.seed + 1;
  const auto [mc, rc] = train_lm(sine_data(300), hp2);
  CHECK(model_to_json(mc) != model_to_json(ma));
}

TEST_CASE("an unlearnable target trips the validation patience") {
  TrainData d;
  d.dim = 1;
  Rng r(99);
  for (int i = 0; i < 400; ++i) {
    d.x.push_back(r.uniform(-1.0, 1.0));
    d.y.push_back(r.uniform(-1.0, 1.0));
  }
  TrainHyper hp;
  hp.hidden = {5};
  hp.max_epochs = 300;
  hp.patience = 4;
  const auto [model, report] = train_lm(d, hp);
  CHECK(report.stop_reason == StopReason::early_stop);
  CHECK(report.epochs_run < hp.max_epochs);
}

TEST_CASE("the epoch cap is honoured") {
  TrainHyper hp;
  hp.max_epochs = 5;
  hp.loss_goal = 1e-16;
  const auto [model, report] = train_lm(sine_data(500), hp);
  CHECK(report.stop_reason == StopReason::epoch_limit);
  CHECK(report.epochs_run == 5);
}

TEST_CASE("normalization statistics come from the training split alone") {
  const TrainData d = sine_data(400);

  // With the whole set assigned to training, the stored statistics equal the
  // full-set statistics exactly.
  TrainHyper all;
  all.hidden = {4};
  all.max_epochs = 2;
  all.train_frac = 1.0;
  all.val_frac = 0.0;
  const auto [m_all, r_all] = train_lm(d, all);
  const NormStats full = compute_norm_stats(d.x, 1);
  // The rows are summed in shuffled order, so agreement is to rounding, not
  // to the bit.
  CHECK(m_all.input_norm.mean[0] == doctest::Approx(full.mean[0]).epsilon(1e-14));
  CHECK(m_all.input_norm.stdev[0] == doctest::Approx(full.stdev[0]).epsilon(1e-14));
  CHECK(r_all.n_train == 400);
  CHECK(r_all.n_val == 0);
  CHECK(r_all.n_test == 0);

  // With a real split the statistics exclude the held-out rows, so they land
  // measurably away from the full-set values.
  TrainHyper split;
  split.hidden = {4};
  split.max_epochs = 2;
  const auto [m_split, r_split] = train_lm(d, split);
  CHECK(std::abs(m_split.input_norm.mean[0] - full.mean[0]) > 1e-6);
  CHECK(r_split.n_train == 280);
}

TEST_CASE("the subsample cap bounds every split deterministically") {
  TrainHyper hp;
  hp.hidden = {4};
  hp.max_epochs = 2;
  hp.max_samples = 100;
  const auto [model, report] = train_lm(sine_data(1000), hp);
  CHECK(report.n_train == 70);
  CHECK(report.n_val == 15);
  CHECK(report.n_test == 15);
}

TEST_CASE("records map onto regression sets per target") {
  std::vector<DatasetRecord> recs(2);
  recs[0] = {1.1, 0.2, 0.9, 4.5, 0.7, -0.7, -3.0, 0, true};
  recs[1] = {1.3, -0.1, 1.0, 2.5, 0.4, 0.4, 5.0, 1, false};

  const TrainData tf = make_train_data(recs, RegressionTarget::tf);
  CHECK(tf.dim == 3);
  REQUIRE(tf.size() == 2);
  CHECK(tf.x == std::vector<double>{1.1, 0.2, 0.9, 1.3, -0.1, 1.0});
  CHECK(tf.y == std::vector<double>{4.5, 2.5});

  const TrainData pre = make_train_data(recs, RegressionTarget::alpha_pre);
  CHECK(pre.dim == 4);
  CHECK(pre.x == std::vector<double>{1.1, 0.2, 0.9, 4.5, 1.3, -0.1, 1.0, 2.5});
  CHECK(pre.y == std::vector<double>{-0.7, 0.4});

  const TrainData lv = make_train_data(recs, RegressionTarget::lam_v);
  CHECK(lv.dim == 4);
  CHECK(lv.y == std::vector<double>{-3.0, 5.0});

  const TrainData raw = make_train_data(recs, RegressionTarget::alpha_raw);
  CHECK(raw.dim == 4);
  CHECK(raw.y == std::vector<double>{0.7, 0.4});
}

TEST_CASE("degenerate training inputs are rejected") {
  TrainData d;
  d.dim = 1;
  d.x = {1.0, 2.0};
  d.y = {1.0, 2.0};
  CHECK_THROWS_AS(train_lm(d), std::invalid_argument);  // fewer than 4 rows

  TrainData bad;
  bad.dim = 2;
  bad.x = {1.0, 2.0, 3.0};  // not a multiple of dim per row count
  bad.y = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(train_lm(bad), std::invalid_argument);
}
