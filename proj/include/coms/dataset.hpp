#pragma once

#include <optional>

#include "coms/net.hpp"

namespace coms {

/// Per-dimension standardization. Population (1/n) standard deviation; a
/// component whose spread is numerically zero gets std 1 so it maps to 0.
struct NormalizationStats {
  Vector x_mean;
  Vector x_std;
  double y_mean = 0.0;
  double y_std = 1.0;

  [[nodiscard]] DesignVector normalize_x(const DesignVector& raw) const;
  [[nodiscard]] DesignVector denormalize_x(const DesignVector& normalized) const;
  [[nodiscard]] Matrix normalize_designs(const Matrix& raw) const;
  [[nodiscard]] Matrix denormalize_designs(const Matrix& normalized) const;
  [[nodiscard]] double normalize_y(double raw) const { return (raw - y_mean) / y_std; }
  [[nodiscard]] double denormalize_y(double normalized) const { return normalized * y_std + y_mean; }
};

/// Designs are columns of `raw_designs`. Throws ContractViolation for fewer than 2 samples.
[[nodiscard]] NormalizationStats fit_normalization(const Matrix& raw_designs, const Vector& raw_scores);

struct DiscreteShape {
  int length = 0;    // L positions
  int alphabet = 0;  // K letters
  [[nodiscard]] int flat_dim() const { return length * alphabet; }
};

/// Withheld ground-truth extremes used only by evaluation.
struct ScoreBounds {
  double min = 0.0;
  double max = 1.0;
};

/// The training-time view of a task: normalized designs (columns, model space)
/// and normalized scores. Discrete tasks store relaxed logits in model space.
struct OfflineDataset {
  Matrix designs;
  Vector scores;
  NormalizationStats stats;
  bool is_discrete = false;
  DiscreteShape shape;
  std::optional<ScoreBounds> oracle_bounds;

  /// Fits normalization on the raw data and stores the normalized copy.
  static OfflineDataset from_raw(const Matrix& raw_designs, const Vector& raw_scores,
                                 bool is_discrete = false, DiscreteShape shape = {});
  /// Normalizes with previously fitted statistics.
  static OfflineDataset from_raw_with_stats(const Matrix& raw_designs, const Vector& raw_scores,
                                            NormalizationStats stats, bool is_discrete = false,
                                            DiscreteShape shape = {});

  [[nodiscard]] Eigen::Index size() const { return designs.cols(); }
  [[nodiscard]] Eigen::Index dim() const { return designs.rows(); }
  [[nodiscard]] Matrix raw_designs() const { return stats.denormalize_designs(designs); }
  [[nodiscard]] Vector raw_scores() const;
};

}  // namespace coms
