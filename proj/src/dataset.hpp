#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "grid_model.hpp"
#include "power_flow.hpp"

namespace pinnse {

enum class Scenario { SteadyState, GeneratorOutage };

std::string_view to_string(Scenario scenario);
Scenario parse_scenario(std::string_view name);  // "steady" | "outage"

/// One time instance.
struct Sample {
  Eigen::VectorXd p_meas;
  Eigen::VectorXd q_meas;
  PolarVoltage v_true;
  CurrentSet i_true;  // always Y * v_true, never derived from noisy data
};

struct NoiseSpec {
  double p_sigma_rel = 0.0;
  double q_sigma_rel = 0.0;
  std::uint64_t seed = 0;
};

/// Defaults: 1% for the SCADA-grade steady-state set, 0.1% for the
/// PMU-grade outage trajectory.
NoiseSpec default_noise(Scenario scenario, std::uint64_t seed);

/// Fitted on training rows only. Inputs are [p_1..p_N, q_1..q_N], targets
/// [vmag_1..vmag_N, vang_1..vang_N].
struct PreprocessStats {
  static constexpr double kZeroEpsilon = 1e-8;

  Eigen::VectorXd input_mean, input_std;
  Eigen::VectorXd input_min, input_max;  // of standardized inputs
  Eigen::VectorXd target_min, target_max;
  std::vector<bool> input_constant, target_constant;
  double zero_epsilon = kZeroEpsilon;
  std::vector<std::string> warnings;

  int input_dim() const noexcept { return static_cast<int>(input_mean.size()); }
  int target_dim() const noexcept { return static_cast<int>(target_min.size()); }

  Eigen::VectorXd transform_input(const Eigen::VectorXd& raw) const;
  Eigen::VectorXd inverse_input(const Eigen::VectorXd& scaled) const;
  Eigen::VectorXd transform_target(const Eigen::VectorXd& physical) const;
  Eigen::VectorXd inverse_target(const Eigen::VectorXd& scaled) const;
  /// d physical / d scaled per target feature (0 for constant features).
  Eigen::VectorXd target_scale() const;
};

struct GenerationStats {
  int retries = 0;
  int max_iterations = 0;
  double max_mismatch = 0.0;
};

struct Dataset {
  std::vector<Sample> samples;
  Scenario scenario = Scenario::SteadyState;
  std::uint64_t seed = 0;
  int n_buses = 0;
  std::string case_name;
  NoiseSpec noise;  // sigmas are zero until add_noise runs
  std::optional<PreprocessStats> preprocess;
  GenerationStats generation;

  std::size_t size() const noexcept { return samples.size(); }
};

/// Raw feature vector [p, q] and target vector [vmag, vang] of one sample.
Eigen::VectorXd input_vector(const Sample& s);
Eigen::VectorXd target_vector(const Sample& s);

struct SteadyStateOptions {
  int n = 192;
  double load_band = 0.2;
  std::uint64_t seed = 0;
};

/// Every bus load scaled by an independent U[1-band, 1+band] factor, then
/// solved. Measurements are noiseless until add_noise.
Dataset generate_steady_state(const GridModel& grid, const SteadyStateOptions& options);

struct OutageOptions {
  int n = 2000;
  std::uint64_t seed = 0;
  double load_jitter = 0.01;
  int outage_bus = 1;  // 0-based; bus 2 in case labels
};

/// Quasi-static trajectory: base operation for the first 10% of instances,
/// a step of the outage bus generation to zero, then exponential recovery
/// with time constant n/4. The generator loses voltage control while out.
Dataset generate_outage_trajectory(const GridModel& grid, const OutageOptions& options);

/// Generation at the outage bus for instance `index` as a fraction of base.
double outage_generation_fraction(int index, int n);

/// p <- p (1 + e), e ~ N(0, sigma^2), likewise q. Truth is untouched.
Dataset add_noise(Dataset ds, const NoiseSpec& spec);

struct Preprocessed {
  Eigen::MatrixXd inputs;   // 2N x S, scaled
  Eigen::MatrixXd targets;  // 2N x S, scaled
  ComplexMatrix currents;   // N x S, physical units
  PreprocessStats stats;
};

PreprocessStats fit_preprocess(const Dataset& ds, const std::vector<int>& train_indices);

/// Fits on train_indices and transforms every sample of ds with those
/// statistics (columns follow sample order).
Preprocessed preprocess(const Dataset& ds, const std::vector<int>& train_indices);
Preprocessed apply_preprocess(const Dataset& ds, const PreprocessStats& stats);

struct Fold {
  std::vector<int> train;
  std::vector<int> val;
};

/// Seeded shuffle then contiguous blocks; the first n % k folds get one extra
/// validation index. Index lists are sorted.
std::vector<Fold> k_fold_split(int n, int k, std::uint64_t seed);

}  // namespace pinnse
