#include "loss.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace pinnse {

DataLoss data_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
    throw DimensionError("prediction and truth shapes differ");
  }
  if (pred.size() == 0) throw DimensionError("empty batch");
  const Eigen::ArrayXXd sq = (pred - truth).array().square();
  DataLoss out;
  out.u_raw = sq.mean();
  out.max_sq = sq.maxCoeff();
  out.u_norm = out.max_sq > 0.0 ? out.u_raw / out.max_sq : 0.0;
  return out;
}

PhysicsLoss physics_loss(const ComplexMatrix& i_pred, const ComplexMatrix& i_true) {
  if (i_pred.rows() != i_true.rows() || i_pred.cols() != i_true.cols()) {
    throw DimensionError("current batches differ in shape");
  }
  if (i_pred.size() == 0) throw DimensionError("empty batch");
  const Eigen::ArrayXXd mod = (i_pred - i_true).cwiseAbs().array();
  PhysicsLoss out;
  out.f_raw = mod.mean();
  out.max_abs = mod.maxCoeff();
  out.f_norm = out.max_abs > 0.0 ? out.f_raw / out.max_abs : 0.0;
  return out;
}

double combine(double u_norm, double f_norm, double lambda1, double lambda2) {
  return lambda1 * u_norm + lambda2 * f_norm;
}

Eigen::MatrixXd data_loss_gradient(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth,
                                   double max_sq) {
  if (max_sq <= 0.0) return Eigen::MatrixXd::Zero(pred.rows(), pred.cols());
  const double scale = 2.0 / (static_cast<double>(pred.size()) * max_sq);
  return scale * (pred - truth);
}

ComplexMatrix physics_loss_gradient(const ComplexMatrix& i_pred, const ComplexMatrix& i_true,
                                    double max_abs) {
  ComplexMatrix grad = ComplexMatrix::Zero(i_pred.rows(), i_pred.cols());
  if (max_abs <= 0.0) return grad;
  const double scale = 1.0 / (static_cast<double>(i_pred.size()) * max_abs);
  for (Eigen::Index c = 0; c < i_pred.cols(); ++c) {
    for (Eigen::Index r = 0; r < i_pred.rows(); ++r) {
      const Complex d = i_pred(r, c) - i_true(r, c);
      const double m = std::abs(d);
      if (m > 0.0) grad(r, c) = d * (scale / m);
    }
  }
  return grad;
}

PhysicsMap::PhysicsMap(const AdmittanceMatrix& y, const PreprocessStats& stats)
    : y_(y.entries()), y_adjoint_(y.entries().adjoint()) {
  if (stats.target_dim() != 2 * y.n()) {
    throw DimensionError("preprocessing statistics do not match the grid size");
  }
  scale_ = stats.target_scale();
  offset_ = stats.target_min;
}

void PhysicsMap::physical(const Eigen::MatrixXd& outputs, Eigen::MatrixXd& mag,
                          Eigen::MatrixXd& ang) const {
  const int n = this->n();
  if (outputs.rows() != 2 * n) throw DimensionError("network output has wrong dimension");
  // physical = min + (scaled + 1) * scale; constant features have scale 0.
  const Eigen::ArrayXXd shifted = outputs.array() + 1.0;
  mag = (shifted.topRows(n).colwise() * scale_.head(n).array()).colwise() + offset_.head(n).array();
  ang = (shifted.bottomRows(n).colwise() * scale_.tail(n).array()).colwise() + offset_.tail(n).array();
}

ComplexMatrix PhysicsMap::currents(const Eigen::MatrixXd& outputs) const {
  Eigen::MatrixXd mag, ang;
  physical(outputs, mag, ang);
  ComplexMatrix v(mag.rows(), mag.cols());
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    for (Eigen::Index r = 0; r < v.rows(); ++r) v(r, c) = std::polar(mag(r, c), ang(r, c));
  }
  return y_ * v;
}

Eigen::MatrixXd PhysicsMap::backprop(const Eigen::MatrixXd& outputs,
                                     const ComplexMatrix& grad_current) const {
  Eigen::MatrixXd mag, ang;
  physical(outputs, mag, ang);
  const int n = this->n();
  // For real-valued L, dL/dV (packed Re + j Im) = Y^H dL/dI.
  const ComplexMatrix grad_v = y_adjoint_ * grad_current;
  Eigen::MatrixXd out(2 * n, outputs.cols());
  for (Eigen::Index c = 0; c < outputs.cols(); ++c) {
    for (int r = 0; r < n; ++r) {
      const double cs = std::cos(ang(r, c));
      const double sn = std::sin(ang(r, c));
      const double gre = grad_v(r, c).real();
      const double gim = grad_v(r, c).imag();
      out(r, c) = (gre * cs + gim * sn) * scale_(r);
      out(n + r, c) = mag(r, c) * (gim * cs - gre * sn) * scale_(n + r);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view regime_key(Regime regime) {
  switch (regime) {
    case Regime::PlainNN: return "nn";
    case Regime::Increment10: return "inc10";
    case Regime::Increment20: return "inc20";
    case Regime::Increment25: return "inc25";
    case Regime::Increment33: return "inc33";
    case Regime::Increment50: return "inc50";
  }
  return "?";
}

std::string regime_label(Regime regime) {
  if (regime == Regime::PlainNN) return "NN";
  return std::string(regime_key(regime).substr(3)) + "% increment";
}

Regime parse_regime(std::string_view key) {
  for (Regime r : kAllRegimes) {
    if (regime_key(r) == key) return r;
  }
  throw ConfigError("unknown regime '" + std::string(key) + "' (expected nn, inc10, inc20, inc25, inc33, inc50)");
}

double regime_increment(Regime regime) {
  switch (regime) {
    case Regime::PlainNN: return 0.0;
    case Regime::Increment10: return 0.10;
    case Regime::Increment20: return 0.20;
    case Regime::Increment25: return 0.25;
    case Regime::Increment33: return 0.33;
    case Regime::Increment50: return 0.50;
  }
  return 0.0;
}

std::pair<double, double> schedule_lambdas(const LambdaSchedule& schedule, int epoch) {
  if (schedule.regime == Regime::PlainNN) return {1.0, 0.0};
  const int period = std::max(1, schedule.period);
  const double step = (std::max(epoch, 0) / period) * regime_increment(schedule.regime);
  const double l1 = std::clamp(schedule.lambda1_0 - step, 0.0, 1.0);
  const double l2 = std::clamp(schedule.lambda2_0 + step, 0.0, 1.0);
  return {l1, l2};
}

}  // namespace pinnse
