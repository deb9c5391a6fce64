#include "neural_net.hpp"

#include <cmath>
#include <random>

#include "error.hpp"
#include "seeding.hpp"

namespace pinnse {

Parameters Parameters::zeros_like(const Parameters& shape) {
  return {Eigen::MatrixXd::Zero(shape.w1.rows(), shape.w1.cols()), Eigen::VectorXd::Zero(shape.b1.size()),
          Eigen::MatrixXd::Zero(shape.w2.rows(), shape.w2.cols()), Eigen::VectorXd::Zero(shape.b2.size())};
}

bool Parameters::all_finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
}

std::array<Eigen::Map<Eigen::VectorXd>, 4> Parameters::views() {
  return {Eigen::Map<Eigen::VectorXd>(w1.data(), w1.size()), Eigen::Map<Eigen::VectorXd>(b1.data(), b1.size()),
          Eigen::Map<Eigen::VectorXd>(w2.data(), w2.size()), Eigen::Map<Eigen::VectorXd>(b2.data(), b2.size())};
}

std::array<Eigen::Map<const Eigen::VectorXd>, 4> Parameters::views() const {
  return {Eigen::Map<const Eigen::VectorXd>(w1.data(), w1.size()),
          Eigen::Map<const Eigen::VectorXd>(b1.data(), b1.size()),
          Eigen::Map<const Eigen::VectorXd>(w2.data(), w2.size()),
          Eigen::Map<const Eigen::VectorXd>(b2.data(), b2.size())};
}

MLP init_mlp(int n_buses, std::uint64_t seed, int hidden) {
  if (n_buses < 1) throw ConfigError("network needs at least one bus");
  if (hidden < 1) throw ConfigError("hidden layer needs at least one unit");
  const int dim = 2 * n_buses;
  Rng rng(seed);
  auto glorot = [&](int rows, int cols) {
    const double bound = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd w(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) w(r, c) = dist(rng);
    }
    return w;
  };
  MLP net;
  net.w1 = glorot(hidden, dim);
  net.b1 = Eigen::VectorXd::Zero(hidden);
  net.w2 = glorot(dim, hidden);
  net.b2 = Eigen::VectorXd::Zero(dim);
  return net;
}

namespace {

Eigen::MatrixXd hidden_activations(const MLP& net, const Eigen::MatrixXd& x) {
  if (x.rows() != net.input_dim()) {
    throw DimensionError("input has " + std::to_string(x.rows()) + " features, network expects " +
                         std::to_string(net.input_dim()));
  }
  Eigen::MatrixXd z = net.w1 * x;
  z.colwise() += net.b1;
  return z.array().tanh().matrix();
}

Eigen::MatrixXd output_layer(const MLP& net, const Eigen::MatrixXd& hidden) {
  Eigen::MatrixXd y = net.w2 * hidden;
  y.colwise() += net.b2;
  return y;
}

LossParts assemble(const DataLoss& u, const PhysicsLoss& f, double l1, double l2) {
  LossParts parts;
  parts.u_raw = u.u_raw;
  parts.u_norm = u.u_norm;
  parts.f_raw = f.f_raw;
  parts.f_norm = f.f_norm;
  parts.lambda1 = l1;
  parts.lambda2 = l2;
  parts.total = combine(u.u_norm, f.f_norm, l1, l2);
  return parts;
}

DataLoss with_denominator(DataLoss u, double max_sq) {
  u.max_sq = max_sq;
  u.u_norm = max_sq > 0.0 ? u.u_raw / max_sq : 0.0;
  return u;
}

PhysicsLoss with_denominator(PhysicsLoss f, double max_abs) {
  f.max_abs = max_abs;
  f.f_norm = max_abs > 0.0 ? f.f_raw / max_abs : 0.0;
  return f;
}

}  // namespace

Eigen::MatrixXd forward(const MLP& net, const Eigen::MatrixXd& x) {
  return output_layer(net, hidden_activations(net, x));
}

LossEvaluation evaluate_loss(const MLP& net, const Batch& batch, const PhysicsMap* physics,
                             double lambda1, double lambda2,
                             const std::optional<Denominators>& frozen) {
  const Eigen::MatrixXd out = forward(net, batch.inputs);
  DataLoss u = data_loss(out, batch.targets);
  PhysicsLoss f;
  if (physics) f = physics_loss(physics->currents(out), batch.currents);
  if (frozen) {
    u = with_denominator(u, frozen->max_sq);
    f = with_denominator(f, frozen->max_abs);
  }
  return {assemble(u, f, lambda1, lambda2), {u.max_sq, f.max_abs}};
}

BackwardResult backward(const MLP& net, const Batch& batch, const PhysicsMap* physics,
                        double lambda1, double lambda2) {
  if (batch.size() == 0) throw DimensionError("empty batch");
  if (!std::isfinite(lambda1) || !std::isfinite(lambda2)) throw TrainingError("non-finite loss weights");

  const Eigen::MatrixXd hidden = hidden_activations(net, batch.inputs);
  const Eigen::MatrixXd out = output_layer(net, hidden);

  const DataLoss u = data_loss(out, batch.targets);
  if (!std::isfinite(u.u_raw) || !std::isfinite(u.u_norm)) {
    throw TrainingError("non-finite value in the data branch of the loss");
  }
  Eigen::MatrixXd grad_out = lambda1 * data_loss_gradient(out, batch.targets, u.max_sq);

  PhysicsLoss f;
  if (physics) {
    const ComplexMatrix i_pred = physics->currents(out);
    f = physics_loss(i_pred, batch.currents);
    if (!std::isfinite(f.f_raw) || !std::isfinite(f.f_norm)) {
      throw TrainingError("non-finite value in the physics branch of the loss");
    }
    if (lambda2 != 0.0) {
      grad_out += lambda2 * physics->backprop(out, physics_loss_gradient(i_pred, batch.currents, f.max_abs));
    }
  }
  if (!grad_out.allFinite()) throw TrainingError("non-finite gradient at the network output");

  BackwardResult result;
  result.loss = assemble(u, f, lambda1, lambda2);
  result.denominators = {u.max_sq, f.max_abs};
  Gradients& g = result.grads;
  g.w2.noalias() = grad_out * hidden.transpose();
  g.b2 = grad_out.rowwise().sum();
  Eigen::MatrixXd grad_hidden = net.w2.transpose() * grad_out;
  grad_hidden.array() *= 1.0 - hidden.array().square();
  g.w1.noalias() = grad_hidden * batch.inputs.transpose();
  g.b1 = grad_hidden.rowwise().sum();
  return result;
}

AdamState AdamState::for_model(const MLP& net, double alpha) {
  AdamState s;
  s.m = Parameters::zeros_like(net);
  s.v = Parameters::zeros_like(net);
  s.alpha = alpha;
  return s;
}

void adam_step(MLP& net, AdamState& state, const Gradients& grads) {
  if (grads.w1.rows() != net.w1.rows() || grads.w1.cols() != net.w1.cols() ||
      grads.w2.rows() != net.w2.rows() || grads.w2.cols() != net.w2.cols() ||
      state.m.count() != net.count()) {
    throw DimensionError("gradient shapes do not match the network");
  }
  state.t += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  auto theta = net.views();
  auto m = state.m.views();
  auto v = state.v.views();
  const auto g = grads.views();
  for (std::size_t k = 0; k < theta.size(); ++k) {
    m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
    v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k].cwiseAbs2();
    theta[k].array() -= state.alpha * (m[k].array() / c1) / ((v[k].array() / c2).sqrt() + state.epsilon);
  }
}

}  // namespace pinnse
