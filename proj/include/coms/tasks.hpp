#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "coms/dataset.hpp"
#include "coms/optimizer.hpp"

namespace coms {

enum class TaskKind {
  kBowl,   // -sum x_i^2
  kCliff,  // -sum x_i^2 inside the box, additionally -50 outside it
  kPwm,    // position-weight sum over an enumerable sequence space
};

inline constexpr double kRegionBound = 2.0;
inline constexpr double kCliffPenalty = 50.0;
inline constexpr std::uint64_t kDefaultPwmSeed = 7;

/// Synthetic ground truth. Continuous tasks sample the box [-bound, bound]^d;
/// the oracle itself is defined everywhere.
struct TaskSpec {
  std::string name;
  TaskKind kind = TaskKind::kBowl;
  int input_dim = 8;
  double region_bound = kRegionBound;
  bool is_discrete = false;
  DiscreteShape shape;   // discrete tasks only
  Matrix pwm_weights;    // L x K, discrete tasks only

  /// Continuous oracle on a raw design.
  [[nodiscard]] double oracle(const DesignVector& x) const;
  /// Discrete oracle on a letter sequence.
  [[nodiscard]] double oracle(const Sequence& seq) const;
  /// Scores a raw model-space design; discrete designs are decoded from logits first.
  [[nodiscard]] double score_design(const DesignVector& raw_design) const;
  /// Withheld extremes over the sampling region (closed form) or the enumeration.
  [[nodiscard]] ScoreBounds bounds() const;
  /// Model-space dimensionality (L*K when discrete).
  [[nodiscard]] int design_dim() const { return is_discrete ? shape.flat_dim() : input_dim; }
};

[[nodiscard]] TaskSpec make_bowl(int dim = 8);
[[nodiscard]] TaskSpec make_cliff(int dim = 8);
[[nodiscard]] TaskSpec make_pwm(int length = 6, int alphabet = 4,
                                std::uint64_t seed = kDefaultPwmSeed);
/// PWM task with caller-supplied weights.
[[nodiscard]] TaskSpec make_pwm(Matrix weights);
/// Looks up "bowl", "cliff" or "pwm"; throws std::invalid_argument otherwise.
[[nodiscard]] TaskSpec make_task(std::string_view name);

/// Every sequence of the task in lexicographic order (position 0 most significant).
[[nodiscard]] std::vector<Sequence> enumerate_sequences(DiscreteShape shape);

struct CurationConfig {
  int n_raw_samples = 2000;
  double keep_percentile = 50.0;
  std::uint64_t seed = 0;
  double smoothing = kDefaultSmoothing;
};

/// Samples the raw pool (uniform box, or the full enumeration when discrete),
/// keeps the lowest `keep_percentile` percent by oracle rank, and normalizes.
/// The returned dataset carries the withheld oracle bounds.
[[nodiscard]] OfflineDataset curate_dataset(const TaskSpec& task, const CurationConfig& config);

}  // namespace coms
