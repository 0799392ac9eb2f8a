#pragma once

#include <concepts>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "coms/dataset.hpp"
#include "coms/net.hpp"

namespace coms {

/// Anything that can be ascended: a single model or an ensemble.
template <class S>
concept Surrogate = requires(const S& s, const DesignVector& x, const Matrix& xs) {
  { s.forward(x) } -> std::convertible_to<double>;
  { s.input_gradient(x) } -> std::convertible_to<Vector>;
  { s.forward_batch(xs) } -> std::convertible_to<Vector>;
  { s.input_gradient_batch(xs) } -> std::convertible_to<Matrix>;
};

/// x_0 ... x_T of fixed-step gradient ascent, with the surrogate value at every point.
/// When `truncated` is set the walk stopped at the last point with a finite gradient.
struct AscentTrajectory {
  std::vector<DesignVector> points;
  std::vector<double> surrogate_values;
  double step_size = 0.0;
  int step_count = 0;
  bool truncated = false;
  std::string error;

  [[nodiscard]] const DesignVector& final_point() const { return points.back(); }
  [[nodiscard]] double final_value() const { return surrogate_values.back(); }
};

/// x_{t+1} = x_t + eta * grad f(x_t) for exactly `steps` steps.
/// A non-finite gradient truncates the trajectory and sets the error flag.
template <Surrogate S>
AscentTrajectory optimize_one(const S& model, const DesignVector& x_init, double eta, int steps) {
  if (steps < 1) throw ContractViolation("gradient ascent needs at least one step");
  if (!(eta > 0.0)) throw ContractViolation("gradient ascent needs a positive step size");
  AscentTrajectory traj;
  traj.step_size = eta;
  traj.step_count = steps;
  traj.points.reserve(static_cast<std::size_t>(steps) + 1);
  traj.surrogate_values.reserve(static_cast<std::size_t>(steps) + 1);
  traj.points.push_back(x_init);
  traj.surrogate_values.push_back(model.forward(x_init));
  for (int t = 0; t < steps; ++t) {
    const Vector grad = model.input_gradient(traj.points.back());
    if (!grad.allFinite()) {
      traj.truncated = true;
      traj.error = fmt::format("non-finite input gradient at step {}", t);
      break;
    }
    DesignVector next = traj.points.back() + eta * grad;
    const double value = model.forward(next);
    traj.points.push_back(std::move(next));
    traj.surrogate_values.push_back(value);
  }
  return traj;
}

/// Ascends every column of `starts` simultaneously and returns the endpoints.
/// Throws std::runtime_error on a non-finite gradient.
template <Surrogate S>
Matrix ascend_batch(const S& model, Matrix starts, double eta, int steps) {
  if (steps < 1) throw ContractViolation("gradient ascent needs at least one step");
  for (int t = 0; t < steps; ++t) {
    const Matrix grad = model.input_gradient_batch(starts);
    if (!grad.allFinite()) {
      throw std::runtime_error(fmt::format("non-finite input gradient at ascent step {}", t));
    }
    starts += eta * grad;
  }
  return starts;
}

/// Designs (model space) proposed for evaluation; one column per candidate.
struct CandidateSet {
  Matrix designs;
  std::vector<Eigen::Index> provenance;  // originating dataset index
  Vector predictions;                    // surrogate value per design; empty for raw seeds
  int truncated_count = 0;

  [[nodiscard]] Eigen::Index size() const { return designs.cols(); }
};

/// The `count` dataset designs with the highest score, ties to the lower index.
/// count == 1 is the argmax initialization.
[[nodiscard]] CandidateSet select_initializations(const OfflineDataset& dataset, Eigen::Index count);

/// Runs optimize_one from each of the top-`count` seeds and keeps every x_T.
template <Surrogate S>
CandidateSet produce_candidates(const S& model, const OfflineDataset& dataset, Eigen::Index count,
                                double eta, int steps) {
  CandidateSet seeds = select_initializations(dataset, count);
  CandidateSet out;
  out.designs.resize(dataset.dim(), count);
  out.provenance = seeds.provenance;
  out.predictions.resize(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const AscentTrajectory traj = optimize_one(model, seeds.designs.col(i), eta, steps);
    out.designs.col(i) = traj.final_point();
    out.predictions(i) = traj.final_value();
    if (traj.truncated) ++out.truncated_count;
  }
  return out;
}

/// Order of candidate indices by descending surrogate prediction, ties to the lower index.
[[nodiscard]] std::vector<Eigen::Index> rank_by_prediction(const CandidateSet& candidates);

// ---- discrete relaxation -------------------------------------------------

inline constexpr double kDefaultSmoothing = 0.2;

/// Letter index per position.
using Sequence = std::vector<int>;

[[nodiscard]] Matrix one_hot(const Sequence& seq, int alphabet);
[[nodiscard]] Sequence letters_of(const Matrix& one_hot_rows);

/// L x K one-hot rows -> L*K log-probabilities (row-major). The selected
/// letter keeps 1 - smoothing, the others share `smoothing` evenly.
[[nodiscard]] DesignVector encode_discrete(const Matrix& one_hot_rows,
                                           double smoothing = kDefaultSmoothing);
/// Per-position argmax over the K logits; ties break to the lowest letter.
[[nodiscard]] Matrix decode_discrete(const DesignVector& logits, DiscreteShape shape);
[[nodiscard]] Sequence decode_sequence(const DesignVector& logits, DiscreteShape shape);

}  // namespace coms
