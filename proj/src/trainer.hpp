#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "loss.hpp"
#include "neural_net.hpp"

namespace pinnse {

struct ExperimentConfig {
  int epochs = 1000;
  int batch_size = 16;
  int folds = 5;
  std::vector<Regime> regimes{std::begin(kAllRegimes), std::end(kAllRegimes)};
  std::uint64_t seed = 0;  // master seed for folds, init and shuffling
  double learning_rate = 1e-3;
  int hidden = kDefaultHidden;
  int period = 100;
  int parallel_folds = 1;
  /// false builds the trainer without the physics branch at all; only
  /// meaningful for PlainNN, whose trajectory must not depend on it.
  bool physics = true;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double u_norm = 0.0;
  double f_norm = 0.0;
  double lambda1 = 1.0;
  double lambda2 = 0.0;
  double val_error = 0.0;
};

struct FoldReport {
  int fold_index = 0;
  std::vector<EpochLog> curve;
  std::vector<double> val_error_per_epoch;  // percent
  int best_epoch = 0;                       // 0-based argmin
  double best_val_error = 0.0;
  MLP final_model;
  AdamState adam;
  PreprocessStats stats;
};

struct RegimeReport {
  Regime regime = Regime::PlainNN;
  double cv_error = 0.0;
  double fold_std = 0.0;  // population standard deviation
  double avg_best_epoch = 0.0;
  double normalized_error = 0.0;  // percent change vs PlainNN
  double normalized_std = 0.0;
  double normalized_epoch = 0.0;
  std::vector<FoldReport> folds;
};

/// 100 x mean |prediction - target| in the scaled [-1, 1] target space.
double validation_error(const MLP& net, const Preprocessed& data, const std::vector<int>& indices);

/// Seeds derived from the master seed; identical across regimes so that
/// regimes are compared on the same folds, initial weights and batch order.
std::uint64_t fold_split_seed(std::uint64_t master);
std::uint64_t fold_init_seed(std::uint64_t master, int fold);
std::uint64_t fold_shuffle_seed(std::uint64_t master, int fold);

FoldReport train_fold(const ExperimentConfig& cfg, const AdmittanceMatrix& y, const Dataset& ds,
                      const Fold& fold, int fold_index, const LambdaSchedule& schedule);

/// Aggregates folds into cv_error / fold_std / avg_best_epoch (normalized
/// columns left at zero).
RegimeReport aggregate(Regime regime, std::vector<FoldReport> folds);

RegimeReport cross_validate(const ExperimentConfig& cfg, const AdmittanceMatrix& y,
                            const Dataset& ds, Regime regime);

/// 100 (x - x_baseline) / x_baseline; 0 when both are zero.
double percent_change(double value, double baseline);

/// Fills the normalized columns against the PlainNN row. Throws ConfigError
/// if PlainNN is missing.
void normalize_against_baseline(std::vector<RegimeReport>& reports);

/// One report per configured regime, in configuration order, normalized
/// against PlainNN.
std::vector<RegimeReport> compare_regimes(const ExperimentConfig& cfg, const AdmittanceMatrix& y,
                                          const Dataset& ds);

}  // namespace pinnse
