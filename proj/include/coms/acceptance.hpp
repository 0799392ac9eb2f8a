#pragma once

#include <functional>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "coms/net.hpp"

namespace coms::acceptance {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct Options {
  /// Criteria to run; empty means 1-9. Criterion 9 needs all of 1-8.
  std::set<int> only;
  /// Progress and per-criterion lines go here when non-null.
  std::ostream* out = nullptr;
};

// Pinned tolerances and thresholds.
inline constexpr double kGradientRelTol = 1e-4;
inline constexpr double kGradientStep = 1e-5;
inline constexpr int kGradientPairsPerArch = 20;
inline constexpr double kGradientSeconds = 10.0;
inline constexpr double kFixedAlpha = 10.0;
inline constexpr double kFixedAlphaGapTol = 0.1;
inline constexpr double kDualGapSlack = 0.25;
inline constexpr int kStabilityTrials = 8;
inline constexpr int kStabilityTMax = 200;
inline constexpr int kStabilityWinsRequired = 7;
inline constexpr double kOffManifoldScore = -50.0;
inline constexpr double kStabilitySeconds = 300.0;
inline constexpr int kDiscreteTrials = 8;
inline constexpr int kDiscreteBudget = 16;
inline constexpr double kTopFraction = 0.05;
inline constexpr int kDiscreteWinsRequired = 6;
inline constexpr double kBudgetFraction = 0.95;
inline constexpr int kBudgetReachBy = 8;
inline constexpr int kTauTrials = 4;
inline constexpr double kTotalSeconds = 900.0;

/// Largest |a-b| / max(|a|, |b|, 1e-6) over all components.
[[nodiscard]] double max_relative_error(const Vector& a, const Vector& b);

/// Central finite-difference gradient of `f` at `x`.
[[nodiscard]] Vector finite_difference(const std::function<double(const Vector&)>& f, const Vector& x,
                                       double h = kGradientStep);

[[nodiscard]] std::vector<CriterionResult> run(const Options& options);

[[nodiscard]] std::string format_line(const CriterionResult& result);

}  // namespace coms::acceptance
