#include "coms/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace coms {

namespace {

constexpr std::size_t kMaxEnumeration = std::size_t{1} << 22;

std::size_t sequence_count(DiscreteShape shape) {
  std::size_t count = 1;
  for (int pos = 0; pos < shape.length; ++pos) {
    count *= static_cast<std::size_t>(shape.alphabet);
    if (count > kMaxEnumeration) throw std::invalid_argument("sequence space too large to enumerate");
  }
  return count;
}

}  // namespace

double TaskSpec::oracle(const DesignVector& x) const {
  if (is_discrete) throw ContractViolation(fmt::format("task {} is discrete", name));
  if (x.size() != input_dim) {
    throw ContractViolation(fmt::format("task {} expects dimension {}, got {}", name, input_dim, x.size()));
  }
  const double bowl = -x.squaredNorm();
  if (kind == TaskKind::kCliff && x.cwiseAbs().maxCoeff() > region_bound) return bowl - kCliffPenalty;
  return bowl;
}

double TaskSpec::oracle(const Sequence& seq) const {
  if (!is_discrete) throw ContractViolation(fmt::format("task {} is continuous", name));
  if (static_cast<int>(seq.size()) != shape.length) {
    throw ContractViolation(fmt::format("task {} expects length {}, got {}", name, shape.length, seq.size()));
  }
  double total = 0.0;
  for (int pos = 0; pos < shape.length; ++pos) {
    const int letter = seq[static_cast<std::size_t>(pos)];
    if (letter < 0 || letter >= shape.alphabet) throw ContractViolation("letter outside alphabet");
    total += pwm_weights(pos, letter);
  }
  return total;
}

double TaskSpec::score_design(const DesignVector& raw_design) const {
  if (is_discrete) return oracle(decode_sequence(raw_design, shape));
  return oracle(raw_design);
}

ScoreBounds TaskSpec::bounds() const {
  if (!is_discrete) {
    return {-static_cast<double>(input_dim) * region_bound * region_bound, 0.0};
  }
  // Separable objective: extremes are per-position extremes.
  return {pwm_weights.rowwise().minCoeff().sum(), pwm_weights.rowwise().maxCoeff().sum()};
}

TaskSpec make_bowl(int dim) {
  if (dim < 1) throw std::invalid_argument("bowl: dimension must be positive");
  TaskSpec task;
  task.name = "bowl";
  task.kind = TaskKind::kBowl;
  task.input_dim = dim;
  return task;
}

TaskSpec make_cliff(int dim) {
  TaskSpec task = make_bowl(dim);
  task.name = "cliff";
  task.kind = TaskKind::kCliff;
  return task;
}

TaskSpec make_pwm(Matrix weights) {
  if (weights.rows() < 1 || weights.cols() < 2) throw std::invalid_argument("pwm: need L>=1, K>=2");
  TaskSpec task;
  task.name = "pwm";
  task.kind = TaskKind::kPwm;
  task.is_discrete = true;
  task.shape = {static_cast<int>(weights.rows()), static_cast<int>(weights.cols())};
  task.input_dim = task.shape.flat_dim();
  task.pwm_weights = std::move(weights);
  return task;
}

TaskSpec make_pwm(int length, int alphabet, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Matrix weights(length, alphabet);
  for (Eigen::Index r = 0; r < weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < weights.cols(); ++c) weights(r, c) = dist(rng);
  }
  return make_pwm(std::move(weights));
}

TaskSpec make_task(std::string_view name) {
  if (name == "bowl") return make_bowl();
  if (name == "cliff") return make_cliff();
  if (name == "pwm") return make_pwm();
  throw std::invalid_argument(fmt::format("unknown task '{}' (expected bowl, cliff or pwm)", name));
}

std::vector<Sequence> enumerate_sequences(DiscreteShape shape) {
  const std::size_t count = sequence_count(shape);
  std::vector<Sequence> out;
  out.reserve(count);
  Sequence seq(static_cast<std::size_t>(shape.length), 0);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(seq);
    for (int pos = shape.length - 1; pos >= 0; --pos) {
      auto& letter = seq[static_cast<std::size_t>(pos)];
      if (++letter < shape.alphabet) break;
      letter = 0;
    }
  }
  return out;
}

OfflineDataset curate_dataset(const TaskSpec& task, const CurationConfig& config) {
  if (config.n_raw_samples < 10) throw ContractViolation("curate_dataset: n_raw_samples must be >= 10");
  if (!(config.keep_percentile > 0.0 && config.keep_percentile <= 100.0)) {
    throw ContractViolation("curate_dataset: keep_percentile must lie in (0, 100]");
  }

  Matrix raw_designs;
  Vector raw_scores;
  if (task.is_discrete) {
    const std::vector<Sequence> all = enumerate_sequences(task.shape);
    raw_designs.resize(task.shape.flat_dim(), static_cast<Eigen::Index>(all.size()));
    raw_scores.resize(static_cast<Eigen::Index>(all.size()));
    for (std::size_t i = 0; i < all.size(); ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      raw_designs.col(col) = encode_discrete(one_hot(all[i], task.shape.alphabet), config.smoothing);
      raw_scores(col) = task.oracle(all[i]);
    }
  } else {
    if (!(task.region_bound > 0.0) || task.input_dim < 1) {
      throw ContractViolation("curate_dataset: degenerate sampling region");
    }
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> dist(-task.region_bound, task.region_bound);
    raw_designs.resize(task.input_dim, config.n_raw_samples);
    raw_scores.resize(config.n_raw_samples);
    for (Eigen::Index i = 0; i < raw_designs.cols(); ++i) {
      for (Eigen::Index r = 0; r < raw_designs.rows(); ++r) raw_designs(r, i) = dist(rng);
      raw_scores(i) = task.oracle(DesignVector(raw_designs.col(i)));
    }
  }

  const Eigen::Index n = raw_scores.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return raw_scores(a) < raw_scores(b); });
  const auto keep = std::max<Eigen::Index>(
      2, static_cast<Eigen::Index>(std::floor(static_cast<double>(n) * config.keep_percentile / 100.0)));
  std::vector<bool> kept(static_cast<std::size_t>(n), false);
  for (Eigen::Index r = 0; r < keep; ++r) kept[static_cast<std::size_t>(order[r])] = true;

  Matrix designs(raw_designs.rows(), keep);
  Vector scores(keep);
  Eigen::Index out = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!kept[static_cast<std::size_t>(i)]) continue;
    designs.col(out) = raw_designs.col(i);
    scores(out) = raw_scores(i);
    ++out;
  }

  OfflineDataset dataset = OfflineDataset::from_raw(designs, scores, task.is_discrete, task.shape);
  dataset.oracle_bounds = task.bounds();
  return dataset;
}

}  // namespace coms
