#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "loss.hpp"

namespace pinnse {

/// Weights and biases of the 2N -> hidden -> 2N network. Also used for
/// gradients and Adam moments, which share the same shapes.
struct Parameters {
  Eigen::MatrixXd w1;  // hidden x 2N
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd w2;  // 2N x hidden
  Eigen::VectorXd b2;  // 2N

  int input_dim() const noexcept { return static_cast<int>(w1.cols()); }
  int hidden() const noexcept { return static_cast<int>(w1.rows()); }
  int output_dim() const noexcept { return static_cast<int>(w2.rows()); }
  Eigen::Index count() const noexcept { return w1.size() + b1.size() + w2.size() + b2.size(); }

  static Parameters zeros_like(const Parameters& shape);
  bool all_finite() const;

  /// Flat views over each tensor, in the order w1, b1, w2, b2.
  std::array<Eigen::Map<Eigen::VectorXd>, 4> views();
  std::array<Eigen::Map<const Eigen::VectorXd>, 4> views() const;
};

using MLP = Parameters;
using Gradients = Parameters;

inline constexpr int kDefaultHidden = 32;

/// Glorot-uniform weights, zero biases, deterministic per seed.
MLP init_mlp(int n_buses, std::uint64_t seed, int hidden = kDefaultHidden);

/// y = w2 tanh(w1 x + b1) + b2 for each column of x.
Eigen::MatrixXd forward(const MLP& net, const Eigen::MatrixXd& x);

/// A batch in network space: scaled inputs and targets plus physical
/// ground-truth currents, one column per sample.
struct Batch {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
  ComplexMatrix currents;

  int size() const noexcept { return static_cast<int>(inputs.cols()); }
};

/// Normalisation denominators of the two loss terms. They are constants of
/// the batch: gradients do not flow through them.
struct Denominators {
  double max_sq = 0.0;
  double max_abs = 0.0;
};

struct LossEvaluation {
  LossParts parts;
  Denominators denominators;
};

/// Loss of the network on a batch. `physics` may be null, in which case the
/// physics term is reported as 0. With `frozen`, the given denominators are
/// used instead of the batch maxima.
LossEvaluation evaluate_loss(const MLP& net, const Batch& batch, const PhysicsMap* physics,
                             double lambda1, double lambda2,
                             const std::optional<Denominators>& frozen = std::nullopt);

struct BackwardResult {
  LossParts loss;
  Denominators denominators;
  Gradients grads;
};

/// Exact gradient of l1 * u_norm + l2 * f_norm with respect to every
/// parameter. The physics branch runs outputs -> physical voltages ->
/// I = Y V -> MAE against the true currents; it is skipped when l2 == 0.
/// Throws TrainingError naming the branch on a non-finite value.
BackwardResult backward(const MLP& net, const Batch& batch, const PhysicsMap* physics,
                        double lambda1, double lambda2);

struct AdamState {
  Parameters m;
  Parameters v;
  std::int64_t t = 0;
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_model(const MLP& net, double alpha = 1e-3);
};

void adam_step(MLP& net, AdamState& state, const Gradients& grads);

}  // namespace pinnse
