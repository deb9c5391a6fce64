#include "wls.hpp"

#include <cmath>
#include <fstream>

#include "dataset_io.hpp"
#include "error.hpp"

namespace pinnse {

namespace {
constexpr int kMaxHalvings = 30;
}  // namespace

WlsResult estimate_wls(const GridModel& grid, const MeasurementSet& meas, const WlsOptions& options) {
  const int n = grid.n();
  if (meas.values.size() != 2 * n || meas.weights.size() != 2 * n) {
    throw DimensionError("measurement set must hold 2N values and weights");
  }
  if ((meas.weights.array() <= 0.0).any() || !meas.weights.allFinite()) {
    throw ConfigError("measurement weights must be positive and finite");
  }
  const int slack = grid.slack_index();
  std::vector<int> ang_idx;
  for (int k = 0; k < n; ++k) {
    if (k != slack) ang_idx.push_back(k);
  }
  const int na = static_cast<int>(ang_idx.size());
  const int dim = na + n;

  PolarVoltage v = PolarVoltage::flat(n);
  auto residual = [&](const PolarVoltage& volt) {
    const InjectionSet h = injections(volt, grid.y_bus());
    Eigen::VectorXd r(2 * n);
    r << meas.values.head(n) - h.p, meas.values.tail(n) - h.q;
    return r;
  };

  Eigen::VectorXd r = residual(v);
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const InjectionJacobian jac = injection_jacobian(v, grid.y_bus());
    Eigen::MatrixXd h(2 * n, dim);
    for (int c = 0; c < na; ++c) {
      h.col(c).head(n) = jac.dp_dang.col(ang_idx[c]);
      h.col(c).tail(n) = jac.dq_dang.col(ang_idx[c]);
    }
    h.block(0, na, n, n) = jac.dp_dmag;
    h.block(n, na, n, n) = jac.dq_dmag;

    const Eigen::MatrixXd wh = meas.weights.asDiagonal() * h;
    const Eigen::MatrixXd gain = h.transpose() * wh;
    Eigen::LLT<Eigen::MatrixXd> llt(gain);
    if (llt.info() != Eigen::Success) {
      throw ConvergenceError("singular WLS gain matrix", std::sqrt(r.dot(meas.weights.cwiseProduct(r))));
    }
    const Eigen::VectorXd dx = llt.solve(wh.transpose() * r);
    if (!dx.allFinite()) {
      throw ConvergenceError("singular WLS gain matrix", std::sqrt(r.dot(meas.weights.cwiseProduct(r))));
    }
    // Backtracking on the weighted objective: far from the solution a full
    // Gauss-Newton step can overshoot (heavily loaded cases from a flat
    // start); close to it the full step is always accepted.
    const double objective = r.dot(meas.weights.cwiseProduct(r));
    double step = 1.0;
    PolarVoltage trial = v;
    Eigen::VectorXd trial_r;
    for (int halving = 0;; ++halving) {
      trial = v;
      for (int c = 0; c < na; ++c) trial.v_ang(ang_idx[c]) += step * dx(c);
      trial.v_mag += step * dx.tail(n);
      trial_r = residual(trial);
      if (trial_r.dot(meas.weights.cwiseProduct(trial_r)) <= objective || halving == kMaxHalvings) break;
      step *= 0.5;
    }
    v = std::move(trial);
    r = std::move(trial_r);
    if (dx.cwiseAbs().maxCoeff() < options.tol) {
      return {v, iter, std::sqrt(r.dot(meas.weights.cwiseProduct(r)))};
    }
  }
  const double norm = std::sqrt(r.dot(meas.weights.cwiseProduct(r)));
  throw ConvergenceError("WLS did not converge in " + std::to_string(options.max_iter) +
                             " iterations (weighted residual " + std::to_string(norm) + ")",
                         norm);
}

MeasurementSet measurements_for(const Sample& sample, const NoiseSpec& noise, double sigma_floor) {
  if (!(sigma_floor > 0.0)) throw ConfigError("sigma floor must be positive");
  const Eigen::Index n = sample.p_meas.size();
  MeasurementSet m;
  m.values.resize(2 * n);
  m.values << sample.p_meas, sample.q_meas;
  m.weights.resize(2 * n);
  for (Eigen::Index k = 0; k < 2 * n; ++k) {
    const double rel = k < n ? noise.p_sigma_rel : noise.q_sigma_rel;
    const double sigma = std::max(rel * std::abs(m.values(k)), sigma_floor);
    m.weights(k) = 1.0 / (sigma * sigma);
  }
  return m;
}

std::vector<WlsSampleResult> wls_batch(const GridModel& grid, const Dataset& ds, const WlsBatchOptions& options) {
  if (ds.n_buses != grid.n()) {
    throw DimensionError("dataset has " + std::to_string(ds.n_buses) + " buses, grid has " +
                         std::to_string(grid.n()));
  }
  std::vector<WlsSampleResult> out;
  out.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Sample& s = ds.samples[i];
    WlsResult r;
    try {
      r = estimate_wls(grid, measurements_for(s, ds.noise, options.sigma_floor), options.solver);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("sample " + std::to_string(i) + ": " + e.what(), e.residual());
    }
    WlsSampleResult res;
    res.index = static_cast<int>(i);
    res.iterations = r.iterations;
    res.residual_norm = r.residual_norm;
    const Eigen::ArrayXd mag_err = (r.voltage.v_mag - s.v_true.v_mag).array().abs();
    const Eigen::ArrayXd ang_err = (r.voltage.v_ang - s.v_true.v_ang).array().abs();
    res.max_mag_error = mag_err.maxCoeff();
    res.max_ang_error = ang_err.maxCoeff();
    res.mean_mag_error = mag_err.mean();
    res.mean_ang_error = ang_err.mean();
    res.estimate = std::move(r.voltage);
    out.push_back(std::move(res));
  }
  return out;
}

WlsSummary summarize(const std::vector<WlsSampleResult>& results) {
  WlsSummary s;
  s.samples = static_cast<int>(results.size());
  for (const auto& r : results) {
    s.mean_mag_error += r.mean_mag_error;
    s.mean_ang_error += r.mean_ang_error;
    s.max_mag_error = std::max(s.max_mag_error, r.max_mag_error);
    s.max_ang_error = std::max(s.max_ang_error, r.max_ang_error);
    s.max_iterations = std::max(s.max_iterations, r.iterations);
  }
  if (s.samples > 0) {
    s.mean_mag_error /= s.samples;
    s.mean_ang_error /= s.samples;
  }
  return s;
}

void write_wls_csv(const std::vector<WlsSampleResult>& results, int n_buses, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "sample,iterations,residual,mean_mag_error,max_mag_error,mean_ang_error,max_ang_error";
  for (int k = 1; k <= n_buses; ++k) out << ",vmag_est_" << k;
  for (int k = 1; k <= n_buses; ++k) out << ",vang_est_" << k;
  out << '\n';
  for (const auto& r : results) {
    out << r.index << ',' << r.iterations << ',' << format_double(r.residual_norm) << ','
        << format_double(r.mean_mag_error) << ',' << format_double(r.max_mag_error) << ','
        << format_double(r.mean_ang_error) << ',' << format_double(r.max_ang_error);
    for (int k = 0; k < n_buses; ++k) out << ',' << format_double(r.estimate.v_mag(k));
    for (int k = 0; k < n_buses; ++k) out << ',' << format_double(r.estimate.v_ang(k));
    out << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace pinnse
