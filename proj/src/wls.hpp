#pragma once

#include <string>
#include <vector>

#include "dataset.hpp"
#include "power_flow.hpp"

namespace pinnse {

/// Stacked injection measurements (P_1..P_N, Q_1..Q_N) with inverse-variance
/// weights.
struct MeasurementSet {
  Eigen::VectorXd values;
  Eigen::VectorXd weights;
};

struct WlsOptions {
  double tol = 1e-8;
  int max_iter = 50;
};

struct WlsResult {
  PolarVoltage voltage;
  int iterations = 0;
  double residual_norm = 0.0;  // weighted residual sqrt(r' W r) at the estimate
};

/// Gauss-Newton weighted least squares from a flat start. State: every bus
/// magnitude and every non-slack angle (slack angle fixed at 0). Converged
/// when max |dx| < tol. Throws ConvergenceError on a singular gain matrix or
/// after max_iter iterations.
WlsResult estimate_wls(const GridModel& grid, const MeasurementSet& meas, const WlsOptions& options = {});

/// Measurement set for one sample with sigma_i = max(rel * |z_i|, floor).
MeasurementSet measurements_for(const Sample& sample, const NoiseSpec& noise, double sigma_floor);

struct WlsSampleResult {
  int index = 0;
  int iterations = 0;
  double residual_norm = 0.0;
  double max_mag_error = 0.0;
  double max_ang_error = 0.0;
  double mean_mag_error = 0.0;
  double mean_ang_error = 0.0;
  PolarVoltage estimate;
};

struct WlsSummary {
  int samples = 0;
  double mean_mag_error = 0.0;  // mean over samples of per-sample mean |error|
  double mean_ang_error = 0.0;
  double max_mag_error = 0.0;
  double max_ang_error = 0.0;
  int max_iterations = 0;
};

struct WlsBatchOptions {
  WlsOptions solver;
  double sigma_floor = 1e-4;
};

/// Runs the estimator over every sample of a dataset, weighting with the
/// dataset's recorded noise spec.
std::vector<WlsSampleResult> wls_batch(const GridModel& grid, const Dataset& ds,
                                       const WlsBatchOptions& options = {});
WlsSummary summarize(const std::vector<WlsSampleResult>& results);

/// Columns: sample, iterations, residual, mean/max magnitude and angle
/// errors, then vmag_est_1..N, vang_est_1..N.
void write_wls_csv(const std::vector<WlsSampleResult>& results, int n_buses, const std::string& path);

}  // namespace pinnse
