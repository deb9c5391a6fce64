#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "grid_model.hpp"

namespace pinnse {

/// Parts of the composite loss  total = l1 * u_norm + l2 * f_norm.
struct LossParts {
  double u_raw = 0.0;   // mean squared state error
  double f_raw = 0.0;   // mean absolute current error
  double u_norm = 0.0;  // u_raw / max squared error, in [0, 1]
  double f_norm = 0.0;  // f_raw / max absolute error, in [0, 1]
  double total = 0.0;
  double lambda1 = 1.0;
  double lambda2 = 0.0;
};

struct DataLoss {
  double u_raw = 0.0;
  double u_norm = 0.0;
  double max_sq = 0.0;  // normalisation denominator
};

struct PhysicsLoss {
  double f_raw = 0.0;
  double f_norm = 0.0;
  double max_abs = 0.0;
};

/// Mean of squared elementwise differences, normalised by the largest one.
/// An all-zero error batch yields (0, 0).
DataLoss data_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

/// Complex modulus per bus and sample; mean normalised by the largest.
PhysicsLoss physics_loss(const ComplexMatrix& i_pred, const ComplexMatrix& i_true);

double combine(double u_norm, double f_norm, double lambda1, double lambda2);

/// d u_norm / d pred with the denominator held fixed.
Eigen::MatrixXd data_loss_gradient(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth,
                                   double max_sq);

/// d f_norm / d (Re, Im) of i_pred packed as Re + j Im, denominator held
/// fixed. Coordinates with zero error get the subgradient 0.
ComplexMatrix physics_loss_gradient(const ComplexMatrix& i_pred, const ComplexMatrix& i_true,
                                    double max_abs);

/// Maps scaled network outputs [vmag; vang] to physical voltages and on to
/// injection currents I = Y V, and carries gradients back along that path.
class PhysicsMap {
 public:
  PhysicsMap(const AdmittanceMatrix& y, const PreprocessStats& stats);

  int n() const noexcept { return static_cast<int>(y_.rows()); }

  /// outputs: 2N x B scaled targets. Returns N x B complex currents.
  ComplexMatrix currents(const Eigen::MatrixXd& outputs) const;

  /// Given dL/dI (Re + j Im per entry), returns dL/d outputs.
  Eigen::MatrixXd backprop(const Eigen::MatrixXd& outputs, const ComplexMatrix& grad_current) const;

 private:
  void physical(const Eigen::MatrixXd& outputs, Eigen::MatrixXd& mag, Eigen::MatrixXd& ang) const;

  ComplexMatrix y_;
  ComplexMatrix y_adjoint_;
  Eigen::VectorXd offset_;  // physical value at scaled -1
  Eigen::VectorXd scale_;   // d physical / d scaled
};

// ---------------------------------------------------------------------------
// Weight schedules

enum class Regime { PlainNN, Increment10, Increment20, Increment25, Increment33, Increment50 };

inline constexpr Regime kAllRegimes[] = {Regime::PlainNN,     Regime::Increment10,
                                         Regime::Increment20, Regime::Increment25,
                                         Regime::Increment33, Regime::Increment50};

/// Short name used on the command line and in files: nn, inc10, ... inc50.
std::string_view regime_key(Regime regime);
/// Table label: "NN", "10% increment", ...
std::string regime_label(Regime regime);
Regime parse_regime(std::string_view key);
/// Step size of the regime (0 for PlainNN).
double regime_increment(Regime regime);

struct LambdaSchedule {
  Regime regime = Regime::PlainNN;
  int period = 100;
  double lambda1_0 = 1.0;
  double lambda2_0 = 0.0;
};

/// Absolute steps every `period` epochs, clamped to [0, 1]:
/// l1 = max(0, l1_0 - k c), l2 = min(1, l2_0 + k c), k = floor(epoch / period).
std::pair<double, double> schedule_lambdas(const LambdaSchedule& schedule, int epoch);

}  // namespace pinnse
