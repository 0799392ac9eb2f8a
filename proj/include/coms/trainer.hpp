#pragma once

#include <cstdint>
#include <vector>

#include "coms/dataset.hpp"
#include "coms/net.hpp"
#include "coms/optimizer.hpp"

namespace coms {

inline constexpr double kContinuousTau = 0.5;
inline constexpr double kDiscreteTau = 2.0;
inline constexpr double kContinuousRatePerSqrtDim = 0.05;
inline constexpr double kDiscreteRatePerSqrtDim = 2.0;
inline constexpr double kDefaultAlphaLr = 0.01;
inline constexpr int kDefaultAscentSteps = 50;
inline constexpr int kDefaultEpochs = 50;
/// Minibatch order comes from std::shuffle with mt19937_64(seed ^ kShuffleSalt).
inline constexpr std::uint64_t kShuffleSalt = 0x9e3779b97f4a7c15ULL;

/// Dual variable of the conservatism constraint gap <= tau.
struct LagrangeState {
  double alpha = 0.0;
  double tau = kContinuousTau;
  double alpha_lr = kDefaultAlphaLr;
};

/// alpha <- max(0, alpha + alpha_lr * (gap - tau)).
[[nodiscard]] LagrangeState dual_update(LagrangeState state, double gap);

struct TrainerConfig {
  int epochs = kDefaultEpochs;
  int batch_size = 128;
  // T: shared by adversarial mining during training and by design optimization.
  int ascent_steps = kDefaultAscentSteps;
  double ascent_rate = kContinuousRatePerSqrtDim;  // eta
  double adam_lr = 1e-3;
  std::uint64_t seed = 0;
  double tau = kContinuousTau;
  double alpha_lr = kDefaultAlphaLr;
  double alpha_init = 0.0;
  std::vector<int> hidden_widths{64, 64};
  double leak = kDefaultLeak;

  /// Task-dependent defaults: eta scales with sqrt of the flattened design size.
  static TrainerConfig defaults(bool is_discrete, Eigen::Index design_dim);
  static TrainerConfig defaults_for(const OfflineDataset& dataset) {
    return defaults(dataset.is_discrete, dataset.dim());
  }

  /// Throws ContractViolation naming the offending field.
  void validate() const;
};

struct ComLoss {
  double mse = 0.0;   // 0.5 * mean (f(x_i) - y_i)^2
  double gap = 0.0;   // mean f(mined) - mean f(data)
  double total = 0.0; // mse + alpha * gap
  double mean_pred_data = 0.0;
  double mean_pred_mined = 0.0;
};

/// Conservative loss on one minibatch; column i of `mined` must be the
/// ascent endpoint started from column i of `designs`.
[[nodiscard]] ComLoss com_loss(const ObjectiveModel& model, const Matrix& designs,
                               const Vector& targets, const Matrix& mined, double alpha);

/// T steps of ascent from x0; throws std::runtime_error on a non-finite gradient.
[[nodiscard]] AscentTrajectory mine_adversarial(const ObjectiveModel& model, const DesignVector& x0,
                                                double eta, int steps);

struct EpochLog {
  int epoch = 0;
  double mse = 0.0;
  double gap = 0.0;
  double alpha = 0.0;
  double mean_pred_data = 0.0;
  double mean_pred_mined = 0.0;
};

struct TrainingResult {
  ObjectiveModel model;
  std::vector<EpochLog> log;
  LagrangeState lagrange;
};

/// Conservative training: per minibatch, mine endpoints from the batch designs,
/// take one Adam step on the loss, then one dual step on alpha.
/// Deterministic in config.seed.
[[nodiscard]] TrainingResult train(const OfflineDataset& dataset, const TrainerConfig& config);

/// Fresh gap measurement: ascend from every dataset design and compare mean predictions.
[[nodiscard]] double conservatism_gap(const ObjectiveModel& model, const OfflineDataset& dataset,
                                      double eta, int steps);

}  // namespace coms
