#include <cmath>

#include <fmt/format.h>

#include "coms/dataset.hpp"

namespace coms {

namespace {

// Spread below this (relative to the magnitude of the mean) is treated as zero.
constexpr double kDegenerateRelStd = 1e-12;

double population_std(const Eigen::Ref<const Vector>& values, double mean) {
  const double var = (values.array() - mean).square().mean();
  const double std = std::sqrt(var);
  if (!(std > kDegenerateRelStd * std::max(1.0, std::abs(mean)))) return 1.0;
  return std;
}

void check_shapes(const Matrix& designs, const NormalizationStats& stats) {
  if (designs.rows() != stats.x_mean.size()) {
    throw ContractViolation(fmt::format("normalization expects dimension {}, got {}",
                                        stats.x_mean.size(), designs.rows()));
  }
}

}  // namespace

DesignVector NormalizationStats::normalize_x(const DesignVector& raw) const {
  check_shapes(raw, *this);
  return (raw - x_mean).cwiseQuotient(x_std);
}

DesignVector NormalizationStats::denormalize_x(const DesignVector& normalized) const {
  check_shapes(normalized, *this);
  return normalized.cwiseProduct(x_std) + x_mean;
}

Matrix NormalizationStats::normalize_designs(const Matrix& raw) const {
  check_shapes(raw, *this);
  return (raw.colwise() - x_mean).array().colwise() / x_std.array();
}

Matrix NormalizationStats::denormalize_designs(const Matrix& normalized) const {
  check_shapes(normalized, *this);
  Matrix out = normalized.array().colwise() * x_std.array();
  out.colwise() += x_mean;
  return out;
}

NormalizationStats fit_normalization(const Matrix& raw_designs, const Vector& raw_scores) {
  if (raw_designs.cols() != raw_scores.size()) {
    throw ContractViolation("fit_normalization: designs and scores differ in count");
  }
  if (raw_scores.size() < 2) {
    throw ContractViolation("fit_normalization: need at least 2 samples");
  }
  NormalizationStats stats;
  stats.x_mean = raw_designs.rowwise().mean();
  stats.x_std.resize(raw_designs.rows());
  for (Eigen::Index r = 0; r < raw_designs.rows(); ++r) {
    stats.x_std(r) = population_std(raw_designs.row(r).transpose(), stats.x_mean(r));
  }
  stats.y_mean = raw_scores.mean();
  stats.y_std = population_std(raw_scores, stats.y_mean);
  return stats;
}

OfflineDataset OfflineDataset::from_raw(const Matrix& raw_designs, const Vector& raw_scores,
                                        bool is_discrete, DiscreteShape shape) {
  return from_raw_with_stats(raw_designs, raw_scores, fit_normalization(raw_designs, raw_scores),
                             is_discrete, shape);
}

OfflineDataset OfflineDataset::from_raw_with_stats(const Matrix& raw_designs, const Vector& raw_scores,
                                                   NormalizationStats stats, bool is_discrete,
                                                   DiscreteShape shape) {
  if (raw_designs.cols() != raw_scores.size() || raw_scores.size() < 2) {
    throw ContractViolation("OfflineDataset needs matching designs/scores and at least 2 samples");
  }
  if (is_discrete && shape.flat_dim() != raw_designs.rows()) {
    throw ContractViolation(fmt::format("discrete shape {}x{} does not match dimension {}",
                                        shape.length, shape.alphabet, raw_designs.rows()));
  }
  OfflineDataset ds;
  ds.designs = stats.normalize_designs(raw_designs);
  ds.scores = (raw_scores.array() - stats.y_mean) / stats.y_std;
  ds.stats = std::move(stats);
  ds.is_discrete = is_discrete;
  ds.shape = shape;
  return ds;
}

Vector OfflineDataset::raw_scores() const {
  return (scores.array() * stats.y_std + stats.y_mean).matrix();
}

}  // namespace coms
