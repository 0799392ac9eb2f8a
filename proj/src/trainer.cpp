#include "coms/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace coms {

LagrangeState dual_update(LagrangeState state, double gap) {
  state.alpha = std::max(0.0, state.alpha + state.alpha_lr * (gap - state.tau));
  return state;
}

TrainerConfig TrainerConfig::defaults(bool is_discrete, Eigen::Index design_dim) {
  TrainerConfig config;
  const double root_d = std::sqrt(static_cast<double>(design_dim));
  config.tau = is_discrete ? kDiscreteTau : kContinuousTau;
  config.ascent_rate = (is_discrete ? kDiscreteRatePerSqrtDim : kContinuousRatePerSqrtDim) * root_d;
  return config;
}

void TrainerConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ContractViolation(fmt::format("invalid trainer config: {}", what));
  };
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(ascent_steps >= 1, "ascent_steps must be >= 1");
  require(ascent_rate > 0.0, "ascent_rate must be > 0");
  require(adam_lr > 0.0, "adam_lr must be > 0");
  require(alpha_lr >= 0.0, "alpha_lr must be >= 0");
  require(alpha_init >= 0.0, "alpha_init must be >= 0");
  require(std::isfinite(tau), "tau must be finite");
  require(leak > 0.0 && leak < 1.0, "leak must lie in (0,1)");
  for (int w : hidden_widths) require(w >= 1, "hidden widths must be >= 1");
}

ComLoss com_loss(const ObjectiveModel& model, const Matrix& designs, const Vector& targets,
                 const Matrix& mined, double alpha) {
  if (designs.cols() != targets.size() || designs.cols() != mined.cols() || designs.cols() == 0) {
    throw ContractViolation("com_loss: batch, targets and mined batch must have equal nonzero length");
  }
  if (alpha < 0.0) throw ContractViolation("com_loss: alpha must be >= 0");
  const Vector data_pred = model.forward_batch(designs);
  const Vector mined_pred = model.forward_batch(mined);
  ComLoss loss;
  loss.mse = 0.5 * (data_pred - targets).squaredNorm() / static_cast<double>(targets.size());
  loss.mean_pred_data = data_pred.mean();
  loss.mean_pred_mined = mined_pred.mean();
  loss.gap = loss.mean_pred_mined - loss.mean_pred_data;
  loss.total = loss.mse + alpha * loss.gap;
  return loss;
}

AscentTrajectory mine_adversarial(const ObjectiveModel& model, const DesignVector& x0, double eta,
                                  int steps) {
  AscentTrajectory traj = optimize_one(model, x0, eta, steps);
  if (traj.truncated) throw std::runtime_error("adversarial mining aborted: " + traj.error);
  return traj;
}

namespace {

// Gradient of mse + alpha * gap with the mined endpoints held constant.
ParameterSet conservative_gradient(const ObjectiveModel& model, const Matrix& designs,
                                   const Vector& targets, const Matrix& mined, double alpha) {
  const Eigen::Index n = designs.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix joint(designs.rows(), 2 * n);
  joint << designs, mined;
  Vector output_grad(2 * n);
  output_grad.head(n) = (model.forward_batch(designs) - targets) * inv_n;
  output_grad.head(n).array() -= alpha * inv_n;
  output_grad.tail(n).setConstant(alpha * inv_n);
  return model.backprop(joint, output_grad);
}

}  // namespace

TrainingResult train(const OfflineDataset& dataset, const TrainerConfig& config) {
  config.validate();
  if (dataset.size() < 2) throw ContractViolation("train: dataset needs at least 2 designs");

  TrainingResult result;
  result.model = ObjectiveModel::make_mlp(static_cast<int>(dataset.dim()), config.hidden_widths,
                                          config.seed, config.leak);
  result.lagrange = LagrangeState{config.alpha_init, config.tau, config.alpha_lr};
  AdamState adam = make_adam(result.model.layers(), config.adam_lr);

  std::mt19937_64 shuffle_rng(config.seed ^ kShuffleSalt);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(dataset.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochLog row;
    row.epoch = epoch;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      const auto n = static_cast<Eigen::Index>(stop - start);
      Matrix designs(dataset.dim(), n);
      Vector targets(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        designs.col(i) = dataset.designs.col(order[start + static_cast<std::size_t>(i)]);
        targets(i) = dataset.scores(order[start + static_cast<std::size_t>(i)]);
      }

      const Matrix mined = ascend_batch(result.model, designs, config.ascent_rate, config.ascent_steps);
      const double alpha = result.lagrange.alpha;
      const ComLoss loss = com_loss(result.model, designs, targets, mined, alpha);
      if (!std::isfinite(loss.total)) {
        throw std::runtime_error(fmt::format(
            "non-finite training loss at epoch {} (mse={}, gap={}, alpha={})", epoch, loss.mse,
            loss.gap, alpha));
      }

      ParameterSet grads;
      if (alpha == 0.0) {
        grads = result.model.param_gradients(
            LossBatch{designs, targets, Vector::Ones(n)}, LossKind::kHalfSquaredError);
      } else {
        grads = conservative_gradient(result.model, designs, targets, mined, alpha);
      }
      adam_step(adam, result.model.mutable_layers(), grads);
      result.lagrange = dual_update(result.lagrange, loss.gap);

      row.mse += loss.mse;
      row.gap += loss.gap;
      row.mean_pred_data += loss.mean_pred_data;
      row.mean_pred_mined += loss.mean_pred_mined;
      ++batches;
    }
    const double inv = 1.0 / static_cast<double>(batches);
    row.mse *= inv;
    row.gap *= inv;
    row.mean_pred_data *= inv;
    row.mean_pred_mined *= inv;
    row.alpha = result.lagrange.alpha;
    result.log.push_back(row);
  }
  return result;
}

double conservatism_gap(const ObjectiveModel& model, const OfflineDataset& dataset, double eta,
                        int steps) {
  const Matrix mined = ascend_batch(model, dataset.designs, eta, steps);
  return model.forward_batch(mined).mean() - model.forward_batch(dataset.designs).mean();
}

}  // namespace coms
