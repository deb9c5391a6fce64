#include <cmath>
#include <limits>

#include "doctest.h"
#include "error.hpp"
#include "seeding.hpp"
#include "test_grids.hpp"
#include "trainer.hpp"

using namespace pinnse;

namespace {

struct Toy {
  GridModel grid = pinnse::testing::three_bus();
  Dataset ds = add_noise(generate_steady_state(grid, {20, 0.2, 4}), {0.01, 0.01, 4});
};

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 4;
  cfg.folds = 4;
  cfg.period = 5;
  cfg.hidden = 6;
  cfg.seed = 21;
  return cfg;
}

bool same_params(const MLP& a, const MLP& b) {
  return a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2;
}

// Compares the training trajectory. f_norm is only a logged diagnostic when
// lambda2 is 0, so it can be left out with `compare_f_norm`.
bool same_fold(const FoldReport& a, const FoldReport& b, bool compare_f_norm = true) {
  if (a.curve.size() != b.curve.size() || a.best_epoch != b.best_epoch) return false;
  for (std::size_t e = 0; e < a.curve.size(); ++e) {
    const EpochLog& x = a.curve[e];
    const EpochLog& y = b.curve[e];
    if (x.train_loss != y.train_loss || x.u_norm != y.u_norm || (compare_f_norm && x.f_norm != y.f_norm) ||
        x.val_error != y.val_error || x.lambda1 != y.lambda1 || x.lambda2 != y.lambda2) {
      return false;
    }
  }
  return same_params(a.final_model, b.final_model);
}

FoldReport fold_report(double best_error, int best_epoch) {
  FoldReport f;
  f.best_val_error = best_error;
  f.best_epoch = best_epoch;
  return f;
}

}  // namespace

TEST_CASE("two epochs of one full batch match hand-stepped backward and Adam") {
  Toy toy;
  ExperimentConfig cfg = small_config();
  cfg.epochs = 2;
  cfg.period = 1;
  const auto folds = k_fold_split(static_cast<int>(toy.ds.size()), 4, fold_split_seed(cfg.seed));
  const Fold& fold = folds[1];
  cfg.batch_size = static_cast<int>(fold.train.size());
  const LambdaSchedule schedule{Regime::Increment50, cfg.period};

  const FoldReport report = train_fold(cfg, toy.grid.y_bus(), toy.ds, fold, 1, schedule);

  // The same computation written out step by step.
  const Preprocessed data = preprocess(toy.ds, fold.train);
  const PhysicsMap physics(toy.grid.y_bus(), data.stats);
  MLP net = init_mlp(3, fold_init_seed(cfg.seed, 1), cfg.hidden);
  AdamState adam = AdamState::for_model(net, cfg.learning_rate);
  Rng rng(fold_shuffle_seed(cfg.seed, 1));
  std::vector<int> order = fold.train;
  const double lambdas[2][2] = {{1.0, 0.0}, {0.5, 0.5}};
  for (int epoch = 0; epoch < 2; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    Batch b;
    const auto m = static_cast<Eigen::Index>(order.size());
    b.inputs.resize(6, m);
    b.targets.resize(6, m);
    b.currents.resize(3, m);
    for (Eigen::Index c = 0; c < m; ++c) {
      b.inputs.col(c) = data.inputs.col(order[c]);
      b.targets.col(c) = data.targets.col(order[c]);
      b.currents.col(c) = data.currents.col(order[c]);
    }
    const BackwardResult r = backward(net, b, &physics, lambdas[epoch][0], lambdas[epoch][1]);
    adam_step(net, adam, r.grads);
    CHECK(report.curve[epoch].train_loss == r.loss.total);
    CHECK(report.curve[epoch].lambda1 == lambdas[epoch][0]);
    CHECK(report.curve[epoch].lambda2 == lambdas[epoch][1]);
    CHECK(report.curve[epoch].val_error == validation_error(net, data, fold.val));
  }
  CHECK(same_params(report.final_model, net));
  CHECK(report.adam.t == 2);
}

TEST_CASE("curve length and best-epoch bookkeeping") {
  Toy toy;
  const ExperimentConfig cfg = small_config();
  const RegimeReport r = cross_validate(cfg, toy.grid.y_bus(), toy.ds, Regime::Increment25);
  REQUIRE(r.folds.size() == 4);
  double sum = 0.0;
  for (const FoldReport& f : r.folds) {
    CHECK(f.curve.size() == 30);
    CHECK(f.val_error_per_epoch.size() == 30);
    CHECK(f.best_epoch >= 0);
    CHECK(f.best_epoch < 30);
    // best is the first minimum of the series (0-based epoch index)
    for (int e = 0; e < 30; ++e) {
      if (e < f.best_epoch) CHECK(f.val_error_per_epoch[e] > f.best_val_error);
      else CHECK(f.val_error_per_epoch[e] >= f.best_val_error);
    }
    CHECK(f.val_error_per_epoch[f.best_epoch] == f.best_val_error);
    for (int e = 0; e < 30; ++e) CHECK(f.curve[e].epoch == e);
    sum += f.best_val_error;
  }
  CHECK(r.cv_error == doctest::Approx(sum / 4).epsilon(1e-14));
  // lambda trace follows the 25% schedule with period 5
  const auto& curve = r.folds[0].curve;
  CHECK(curve[4].lambda1 == 1.0);
  CHECK(curve[5].lambda1 == 0.75);
  CHECK(curve[20].lambda1 == 0.0);
  CHECK(curve[29].lambda2 == 1.0);
}

TEST_CASE("PlainNN trajectory does not depend on the physics machinery") {
  Toy toy;
  ExperimentConfig with = small_config();
  ExperimentConfig without = with;
  without.physics = false;
  const RegimeReport a = cross_validate(with, toy.grid.y_bus(), toy.ds, Regime::PlainNN);
  const RegimeReport b = cross_validate(without, toy.grid.y_bus(), toy.ds, Regime::PlainNN);
  for (std::size_t f = 0; f < a.folds.size(); ++f) {
    CHECK(same_fold(a.folds[f], b.folds[f], false));
    for (std::size_t e = 0; e < a.folds[f].curve.size(); ++e) {
      CHECK(a.folds[f].curve[e].lambda1 == 1.0);
      CHECK(a.folds[f].curve[e].lambda2 == 0.0);
      // with the physics map present the residual is still monitored
      CHECK(a.folds[f].curve[e].f_norm > 0.0);
      CHECK(b.folds[f].curve[e].f_norm == 0.0);
    }
  }
}

TEST_CASE("validation samples never influence training of their fold") {
  Toy toy;
  const ExperimentConfig cfg = small_config();
  const auto folds = k_fold_split(static_cast<int>(toy.ds.size()), cfg.folds, fold_split_seed(cfg.seed));
  const Fold& fold = folds[2];
  Dataset altered = toy.ds;
  for (int v : fold.val) {
    altered.samples[v].p_meas *= 3.0;
    altered.samples[v].v_true.v_mag.array() += 0.5;
  }
  const LambdaSchedule schedule{Regime::Increment20, cfg.period};
  const FoldReport a = train_fold(cfg, toy.grid.y_bus(), toy.ds, fold, 2, schedule);
  const FoldReport b = train_fold(cfg, toy.grid.y_bus(), altered, fold, 2, schedule);
  CHECK(same_params(a.final_model, b.final_model));
  for (std::size_t e = 0; e < a.curve.size(); ++e) {
    CHECK(a.curve[e].train_loss == b.curve[e].train_loss);
    CHECK(a.curve[e].val_error != b.curve[e].val_error);
  }
  CHECK(a.stats.input_mean == b.stats.input_mean);
  CHECK(a.stats.target_max == b.stats.target_max);
}

TEST_CASE("cross-validation is deterministic and independent of fold parallelism") {
  Toy toy;
  ExperimentConfig cfg = small_config();
  const RegimeReport a = cross_validate(cfg, toy.grid.y_bus(), toy.ds, Regime::Increment10);
  const RegimeReport b = cross_validate(cfg, toy.grid.y_bus(), toy.ds, Regime::Increment10);
  cfg.parallel_folds = 3;
  const RegimeReport c = cross_validate(cfg, toy.grid.y_bus(), toy.ds, Regime::Increment10);
  for (std::size_t f = 0; f < a.folds.size(); ++f) {
    CHECK(same_fold(a.folds[f], b.folds[f]));
    CHECK(same_fold(a.folds[f], c.folds[f]));
    CHECK(c.folds[f].fold_index == static_cast<int>(f));
  }
  CHECK(a.cv_error == c.cv_error);
  CHECK(a.fold_std == c.fold_std);
}

TEST_CASE("regimes share folds and initial weights") {
  Toy toy;
  ExperimentConfig cfg = small_config();
  cfg.period = 10;
  const RegimeReport nn = cross_validate(cfg, toy.grid.y_bus(), toy.ds, Regime::PlainNN);
  const RegimeReport inc = cross_validate(cfg, toy.grid.y_bus(), toy.ds, Regime::Increment33);
  // identical until the first lambda step
  for (std::size_t f = 0; f < nn.folds.size(); ++f) {
    for (int e = 0; e < 10; ++e) CHECK(nn.folds[f].curve[e].train_loss == inc.folds[f].curve[e].train_loss);
    CHECK(nn.folds[f].curve[10].train_loss != inc.folds[f].curve[10].train_loss);
  }
}

TEST_CASE("aggregate: identical fold errors give zero spread") {
  std::vector<FoldReport> folds;
  for (int f = 0; f < 5; ++f) folds.push_back(fold_report(2.5, 981));
  const RegimeReport r = aggregate(Regime::PlainNN, folds);
  CHECK(r.cv_error == 2.5);
  CHECK(r.fold_std == 0.0);
  CHECK(r.avg_best_epoch == 981.0);
}

TEST_CASE("aggregate uses the population standard deviation") {
  std::vector<FoldReport> folds{fold_report(1.0, 0), fold_report(3.0, 10)};
  const RegimeReport r = aggregate(Regime::Increment10, folds);
  CHECK(r.cv_error == 2.0);
  CHECK(r.fold_std == doctest::Approx(1.0));
  CHECK(r.avg_best_epoch == 5.0);
  CHECK_THROWS_AS(aggregate(Regime::PlainNN, {}), ConfigError);
}

TEST_CASE("normalization against the NN row") {
  CHECK(percent_change(6.27, 7.07) == doctest::Approx(-11.315).epsilon(1e-4));
  CHECK(percent_change(646.2, 981.0) == doctest::Approx(-34.128).epsilon(1e-4));
  CHECK(percent_change(0.0, 0.0) == 0.0);
  CHECK(std::isnan(percent_change(1.0, 0.0)));

  RegimeReport nn;
  nn.regime = Regime::PlainNN;
  nn.cv_error = 7.07;
  nn.fold_std = 0.5;
  nn.avg_best_epoch = 981;
  RegimeReport inc = nn;
  inc.regime = Regime::Increment50;
  inc.cv_error = 6.27;
  inc.avg_best_epoch = 646.2;
  std::vector<RegimeReport> reports{inc, nn};
  normalize_against_baseline(reports);
  CHECK(std::round(reports[0].normalized_error * 100) / 100 == -11.32);
  CHECK(std::round(reports[0].normalized_epoch * 100) / 100 == -34.13);
  CHECK(reports[0].normalized_std == 0.0);
  CHECK(reports[1].normalized_error == 0.0);
  CHECK(reports[1].normalized_std == 0.0);
  CHECK(reports[1].normalized_epoch == 0.0);

  std::vector<RegimeReport> missing{inc};
  CHECK_THROWS_AS(normalize_against_baseline(missing), ConfigError);
}

TEST_CASE("compare_regimes keeps configuration order and requires the baseline") {
  Toy toy;
  ExperimentConfig cfg = small_config();
  cfg.epochs = 6;
  cfg.regimes = {Regime::Increment50, Regime::PlainNN};
  const auto reports = compare_regimes(cfg, toy.grid.y_bus(), toy.ds);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].regime == Regime::Increment50);
  CHECK(reports[1].normalized_error == 0.0);
  cfg.regimes = {Regime::Increment10};
  CHECK_THROWS_AS(compare_regimes(cfg, toy.grid.y_bus(), toy.ds), ConfigError);
}

TEST_CASE("configuration validation") {
  Toy toy;
  ExperimentConfig cfg = small_config();
  cfg.epochs = 3;  // shorter than one schedule period is allowed
  CHECK_NOTHROW(cross_validate(cfg, toy.grid.y_bus(), toy.ds, Regime::Increment50));
  auto bad = [&](auto mutate) {
    ExperimentConfig c = small_config();
    mutate(c);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  };
  bad([](ExperimentConfig& c) { c.epochs = 0; });
  bad([](ExperimentConfig& c) { c.batch_size = 0; });
  bad([](ExperimentConfig& c) { c.folds = 1; });
  bad([](ExperimentConfig& c) { c.learning_rate = 0.0; });
  bad([](ExperimentConfig& c) { c.regimes.clear(); });
  bad([](ExperimentConfig& c) { c.parallel_folds = 0; });
  cfg.batch_size = 100;
  CHECK_THROWS_AS(cross_validate(cfg, toy.grid.y_bus(), toy.ds, Regime::PlainNN), Error);
}

TEST_CASE("partial last batch is used") {
  Toy toy;
  ExperimentConfig cfg = small_config();
  cfg.batch_size = 4;  // 15 training samples -> batches of 4,4,4,3
  cfg.epochs = 2;
  const auto folds = k_fold_split(20, 4, fold_split_seed(cfg.seed));
  REQUIRE(folds[0].train.size() == 15);
  const FoldReport r = train_fold(cfg, toy.grid.y_bus(), toy.ds, folds[0], 0, {Regime::PlainNN, 5});
  CHECK(r.adam.t == 8);
}
