#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "error.hpp"
#include "seeding.hpp"

namespace pinnse {

void ExperimentConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  if (folds < 2) throw ConfigError("need at least 2 folds");
  if (period < 1) throw ConfigError("schedule period must be positive");
  if (hidden < 1) throw ConfigError("hidden width must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (parallel_folds < 1) throw ConfigError("parallel folds must be at least 1");
  if (regimes.empty()) throw ConfigError("no regimes configured");
}

std::uint64_t fold_split_seed(std::uint64_t master) { return derive_seed(master, "folds"); }
std::uint64_t fold_init_seed(std::uint64_t master, int fold) { return derive_seed(master, "init", fold); }
std::uint64_t fold_shuffle_seed(std::uint64_t master, int fold) {
  return derive_seed(master, "shuffle", fold);
}

namespace {

Batch gather(const Preprocessed& data, const std::vector<int>& order, std::size_t begin, std::size_t end) {
  const auto count = static_cast<Eigen::Index>(end - begin);
  Batch b;
  b.inputs.resize(data.inputs.rows(), count);
  b.targets.resize(data.targets.rows(), count);
  b.currents.resize(data.currents.rows(), count);
  for (Eigen::Index c = 0; c < count; ++c) {
    const int s = order[begin + c];
    b.inputs.col(c) = data.inputs.col(s);
    b.targets.col(c) = data.targets.col(s);
    b.currents.col(c) = data.currents.col(s);
  }
  return b;
}

}  // namespace

double validation_error(const MLP& net, const Preprocessed& data, const std::vector<int>& indices) {
  if (indices.empty()) throw ConfigError("validation set is empty");
  const Batch b = gather(data, indices, 0, indices.size());
  return 100.0 * (forward(net, b.inputs) - b.targets).cwiseAbs().mean();
}

FoldReport train_fold(const ExperimentConfig& cfg, const AdmittanceMatrix& y, const Dataset& ds,
                      const Fold& fold, int fold_index, const LambdaSchedule& schedule) {
  cfg.validate();
  if (fold.train.empty() || fold.val.empty()) throw ConfigError("fold has an empty split");
  if (static_cast<std::size_t>(cfg.batch_size) > fold.train.size()) {
    throw ConfigError("batch size exceeds the fold's training size");
  }

  const Preprocessed data = preprocess(ds, fold.train);
  const std::optional<PhysicsMap> physics =
      cfg.physics ? std::optional<PhysicsMap>(PhysicsMap(y, data.stats)) : std::nullopt;
  const PhysicsMap* physics_ptr = physics ? &*physics : nullptr;

  FoldReport report;
  report.fold_index = fold_index;
  report.stats = data.stats;
  MLP net = init_mlp(ds.n_buses, fold_init_seed(cfg.seed, fold_index), cfg.hidden);
  AdamState adam = AdamState::for_model(net, cfg.learning_rate);
  Rng shuffle_rng(fold_shuffle_seed(cfg.seed, fold_index));
  std::vector<int> order = fold.train;

  report.curve.reserve(cfg.epochs);
  report.val_error_per_epoch.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto [l1, l2] = schedule_lambdas(schedule, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochLog log;
    log.epoch = epoch;
    log.lambda1 = l1;
    log.lambda2 = l2;
    int batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const Batch batch = gather(data, order, begin, end);
      BackwardResult r;
      try {
        r = backward(net, batch, physics_ptr, l1, l2);
      } catch (const TrainingError& e) {
        throw TrainingError("fold " + std::to_string(fold_index) + ", epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batches) + ": " + e.what());
      }
      adam_step(net, adam, r.grads);
      log.train_loss += r.loss.total;
      log.u_norm += r.loss.u_norm;
      log.f_norm += r.loss.f_norm;
      ++batches;
    }
    log.train_loss /= batches;
    log.u_norm /= batches;
    log.f_norm /= batches;
    if (!net.all_finite()) {
      throw TrainingError("fold " + std::to_string(fold_index) + ", epoch " + std::to_string(epoch) +
                          ": parameters became non-finite");
    }
    log.val_error = validation_error(net, data, fold.val);
    report.curve.push_back(log);
    report.val_error_per_epoch.push_back(log.val_error);
  }

  const auto best = std::min_element(report.val_error_per_epoch.begin(), report.val_error_per_epoch.end());
  report.best_epoch = static_cast<int>(best - report.val_error_per_epoch.begin());
  report.best_val_error = *best;
  report.final_model = std::move(net);
  report.adam = std::move(adam);
  return report;
}

RegimeReport aggregate(Regime regime, std::vector<FoldReport> folds) {
  if (folds.empty()) throw ConfigError("no folds to aggregate");
  RegimeReport r;
  r.regime = regime;
  const double k = static_cast<double>(folds.size());
  for (const FoldReport& f : folds) {
    r.cv_error += f.best_val_error;
    r.avg_best_epoch += f.best_epoch;
  }
  r.cv_error /= k;
  r.avg_best_epoch /= k;
  double var = 0.0;
  for (const FoldReport& f : folds) var += (f.best_val_error - r.cv_error) * (f.best_val_error - r.cv_error);
  r.fold_std = std::sqrt(var / k);
  r.folds = std::move(folds);
  return r;
}

RegimeReport cross_validate(const ExperimentConfig& cfg, const AdmittanceMatrix& y,
                            const Dataset& ds, Regime regime) {
  cfg.validate();
  const auto folds = k_fold_split(static_cast<int>(ds.size()), cfg.folds, fold_split_seed(cfg.seed));
  const LambdaSchedule schedule{regime, cfg.period};

  std::vector<FoldReport> reports(folds.size());
  std::vector<std::exception_ptr> errors(folds.size());
  auto run = [&](std::size_t f) {
    try {
      reports[f] = train_fold(cfg, y, ds, folds[f], static_cast<int>(f), schedule);
    } catch (...) {
      errors[f] = std::current_exception();
    }
  };

  const std::size_t workers = std::min<std::size_t>(cfg.parallel_folds, folds.size());
  if (workers <= 1) {
    for (std::size_t f = 0; f < folds.size(); ++f) run(f);
  } else {
    std::mutex mutex;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t f;
          {
            std::lock_guard lock(mutex);
            if (next >= folds.size()) return;
            f = next++;
          }
          run(f);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  for (std::size_t f = 0; f < errors.size(); ++f) {
    if (!errors[f]) continue;
    try {
      std::rethrow_exception(errors[f]);
    } catch (const TrainingError&) {
      throw;  // already carries the fold index
    } catch (const ConfigError& e) {
      throw ConfigError("fold " + std::to_string(f) + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error("fold " + std::to_string(f) + ": " + e.what());
    }
  }
  return aggregate(regime, std::move(reports));
}

double percent_change(double value, double baseline) {
  if (baseline == 0.0) return value == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
  return 100.0 * (value - baseline) / baseline;
}

void normalize_against_baseline(std::vector<RegimeReport>& reports) {
  const auto base = std::find_if(reports.begin(), reports.end(),
                                 [](const RegimeReport& r) { return r.regime == Regime::PlainNN; });
  if (base == reports.end()) throw ConfigError("the nn regime is required as the normalization baseline");
  const RegimeReport baseline = *base;
  for (RegimeReport& r : reports) {
    r.normalized_error = percent_change(r.cv_error, baseline.cv_error);
    r.normalized_std = percent_change(r.fold_std, baseline.fold_std);
    r.normalized_epoch = percent_change(r.avg_best_epoch, baseline.avg_best_epoch);
  }
}

std::vector<RegimeReport> compare_regimes(const ExperimentConfig& cfg, const AdmittanceMatrix& y,
                                          const Dataset& ds) {
  cfg.validate();
  if (std::find(cfg.regimes.begin(), cfg.regimes.end(), Regime::PlainNN) == cfg.regimes.end()) {
    throw ConfigError("the nn regime is required as the normalization baseline");
  }
  std::vector<RegimeReport> reports;
  for (Regime regime : cfg.regimes) reports.push_back(cross_validate(cfg, y, ds, regime));
  normalize_against_baseline(reports);
  return reports;
}

}  // namespace pinnse
