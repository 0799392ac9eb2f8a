#pragma once

#include <vector>

#include "coms/net.hpp"
#include "coms/trainer.hpp"

namespace coms {

inline constexpr int kDefaultEnsembleSize = 5;

enum class Aggregate { kMin, kMean };

/// Independently seeded regressors combined by min or mean. In min mode the
/// input gradient is that of the lowest member (ties to the lowest index).
class Ensemble {
 public:
  Ensemble(std::vector<ObjectiveModel> members, Aggregate aggregate);

  [[nodiscard]] const std::vector<ObjectiveModel>& members() const { return members_; }
  [[nodiscard]] Aggregate aggregate() const { return aggregate_; }
  [[nodiscard]] Eigen::Index input_dim() const { return members_.front().input_dim(); }

  [[nodiscard]] double forward(const DesignVector& x) const;
  [[nodiscard]] Vector forward_batch(const Matrix& designs) const;
  [[nodiscard]] Vector input_gradient(const DesignVector& x) const;
  [[nodiscard]] Matrix input_gradient_batch(const Matrix& designs) const;

 private:
  std::vector<ObjectiveModel> members_;
  Aggregate aggregate_;
};

/// Plain supervised regression: the conservative trainer with alpha pinned to 0.
[[nodiscard]] TrainingResult train_naive(const OfflineDataset& dataset, TrainerConfig config);

/// Member m uses seed config.seed + m * kEnsembleSeedStride.
inline constexpr std::uint64_t kEnsembleSeedStride = 1000003;
[[nodiscard]] Ensemble train_ensemble(const OfflineDataset& dataset, const TrainerConfig& config,
                                      int member_count, Aggregate aggregate);

}  // namespace coms
