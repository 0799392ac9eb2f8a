#include "coms/baselines.hpp"

namespace coms {

Ensemble::Ensemble(std::vector<ObjectiveModel> members, Aggregate aggregate)
    : members_(std::move(members)), aggregate_(aggregate) {
  if (members_.empty()) throw ContractViolation("Ensemble needs at least one member");
  for (const ObjectiveModel& m : members_) {
    if (m.input_dim() != members_.front().input_dim()) {
      throw ContractViolation("Ensemble members must share input_dim");
    }
  }
}

double Ensemble::forward(const DesignVector& x) const {
  double acc = members_.front().forward(x);
  for (std::size_t m = 1; m < members_.size(); ++m) {
    const double v = members_[m].forward(x);
    acc = aggregate_ == Aggregate::kMin ? std::min(acc, v) : acc + v;
  }
  return aggregate_ == Aggregate::kMin ? acc : acc / static_cast<double>(members_.size());
}

Vector Ensemble::forward_batch(const Matrix& designs) const {
  Vector acc = members_.front().forward_batch(designs);
  for (std::size_t m = 1; m < members_.size(); ++m) {
    const Vector v = members_[m].forward_batch(designs);
    if (aggregate_ == Aggregate::kMin) {
      acc = acc.cwiseMin(v);
    } else {
      acc += v;
    }
  }
  if (aggregate_ == Aggregate::kMean) acc /= static_cast<double>(members_.size());
  return acc;
}

Vector Ensemble::input_gradient(const DesignVector& x) const {
  if (aggregate_ == Aggregate::kMean) {
    Vector acc = members_.front().input_gradient(x);
    for (std::size_t m = 1; m < members_.size(); ++m) acc += members_[m].input_gradient(x);
    return acc / static_cast<double>(members_.size());
  }
  std::size_t active = 0;
  double lowest = members_.front().forward(x);
  for (std::size_t m = 1; m < members_.size(); ++m) {
    const double v = members_[m].forward(x);
    if (v < lowest) {
      lowest = v;
      active = m;
    }
  }
  return members_[active].input_gradient(x);
}

Matrix Ensemble::input_gradient_batch(const Matrix& designs) const {
  if (aggregate_ == Aggregate::kMean) {
    Matrix acc = members_.front().input_gradient_batch(designs);
    for (std::size_t m = 1; m < members_.size(); ++m) acc += members_[m].input_gradient_batch(designs);
    return acc / static_cast<double>(members_.size());
  }
  Vector lowest = members_.front().forward_batch(designs);
  Matrix grad = members_.front().input_gradient_batch(designs);
  for (std::size_t m = 1; m < members_.size(); ++m) {
    const Vector v = members_[m].forward_batch(designs);
    const Matrix g = members_[m].input_gradient_batch(designs);
    for (Eigen::Index j = 0; j < designs.cols(); ++j) {
      if (v(j) < lowest(j)) {
        lowest(j) = v(j);
        grad.col(j) = g.col(j);
      }
    }
  }
  return grad;
}

TrainingResult train_naive(const OfflineDataset& dataset, TrainerConfig config) {
  config.alpha_init = 0.0;
  config.alpha_lr = 0.0;
  return train(dataset, config);
}

Ensemble train_ensemble(const OfflineDataset& dataset, const TrainerConfig& config,
                        int member_count, Aggregate aggregate) {
  if (member_count < 1) throw ContractViolation("train_ensemble: need at least one member");
  std::vector<ObjectiveModel> members;
  members.reserve(static_cast<std::size_t>(member_count));
  for (int m = 0; m < member_count; ++m) {
    TrainerConfig member_config = config;
    member_config.seed = config.seed + static_cast<std::uint64_t>(m) * kEnsembleSeedStride;
    members.push_back(train_naive(dataset, member_config).model);
  }
  return Ensemble(std::move(members), aggregate);
}

}  // namespace coms
