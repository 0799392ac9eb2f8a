#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coms/baselines.hpp"
#include "coms/optimizer.hpp"
#include "coms/tasks.hpp"
#include "coms/trainer.hpp"

namespace coms {

enum class Method { kComs, kGradNaive, kGradMin, kGradMean };

[[nodiscard]] std::string_view method_name(Method method);
/// Accepts "coms", "grad-naive", "grad-min", "grad-mean".
[[nodiscard]] Method parse_method(std::string_view name);

/// (y - min) / (max - min).
[[nodiscard]] double normalized_score(double y, ScoreBounds bounds);

/// Median; an even count averages the two middle values.
[[nodiscard]] double median(std::vector<double> values);

struct BudgetScore {
  Eigen::Index budget = 0;
  double p100 = 0.0;
  double p50 = 0.0;
  double normalized_p100 = 0.0;
  double normalized_p50 = 0.0;
};

/// Ground-truth score of every candidate (denormalized and, when discrete, decoded).
[[nodiscard]] std::vector<double> true_scores(const CandidateSet& candidates, const TaskSpec& task,
                                              const OfflineDataset& dataset);

/// Scores the `budget` most promising candidates: descending surrogate
/// prediction when predictions are present, otherwise the first `budget`.
[[nodiscard]] BudgetScore evaluate_budget(const CandidateSet& candidates, const TaskSpec& task,
                                          const OfflineDataset& dataset, Eigen::Index budget);

/// p100 on nested prefixes of one fixed ranking; monotone in the budget.
[[nodiscard]] std::vector<BudgetScore> budget_sweep(const CandidateSet& candidates,
                                                    const TaskSpec& task,
                                                    const OfflineDataset& dataset,
                                                    const std::vector<Eigen::Index>& budgets);

/// True and surrogate score of every ascent iterate x_0 ... x_{T_max}.
struct StabilityCurve {
  std::vector<double> true_scores;
  std::vector<double> surrogate_values;
  bool truncated = false;

  [[nodiscard]] std::size_t size() const { return true_scores.size(); }
  [[nodiscard]] double final_score() const { return true_scores.back(); }
  [[nodiscard]] double min_score() const;
};

/// Ascends from a (normalized) seed design for t_max steps and scores every iterate.
/// A truncated walk is padded with its last valid score.
template <Surrogate S>
StabilityCurve stability_sweep(const S& model, const TaskSpec& task, const OfflineDataset& dataset,
                               const DesignVector& seed_design, double eta, int t_max) {
  const AscentTrajectory traj = optimize_one(model, seed_design, eta, t_max);
  StabilityCurve curve;
  curve.truncated = traj.truncated;
  for (std::size_t t = 0; t < traj.points.size(); ++t) {
    curve.true_scores.push_back(task.score_design(dataset.stats.denormalize_x(traj.points[t])));
    curve.surrogate_values.push_back(traj.surrogate_values[t]);
  }
  while (curve.true_scores.size() < static_cast<std::size_t>(t_max) + 1) {
    curve.true_scores.push_back(curve.true_scores.back());
    curve.surrogate_values.push_back(curve.surrogate_values.back());
  }
  return curve;
}

struct TauCurve {
  double tau = 0.0;
  double final_alpha = 0.0;
  StabilityCurve curve;
};

/// Trains one conservative model per tau (same seed) and sweeps from the argmax seed.
[[nodiscard]] std::vector<TauCurve> tau_sweep(const OfflineDataset& dataset, const TaskSpec& task,
                                              const std::vector<double>& taus,
                                              const TrainerConfig& base, int t_max);

// ---- experiment orchestration -------------------------------------------

struct ExperimentConfig {
  std::string task = "cliff";
  Method method = Method::kComs;
  int trials = 8;
  std::uint64_t seed = 0;  // trial k trains with seed + k
  Eigen::Index budget = 128;
  int t_max = 200;
  int ensemble_size = kDefaultEnsembleSize;
  CurationConfig curation;
  // Overrides; unset fields take the task-dependent defaults.
  std::optional<double> tau;
  std::optional<double> ascent_rate;
  TrainerConfig trainer;  // tau/ascent_rate here are ignored in favour of the two fields above
};

/// Parses a flat key=value text; '#' starts a comment. Unknown keys are
/// reported together in a single std::invalid_argument.
[[nodiscard]] ExperimentConfig parse_experiment_config(std::string_view text);
/// Applies one key=value pair; returns false when the key is unknown.
bool apply_config_entry(ExperimentConfig& config, std::string_view key, std::string_view value);
[[nodiscard]] std::vector<std::string> experiment_config_keys();
[[nodiscard]] std::string format_experiment_config(const ExperimentConfig& config);

/// Trainer settings for a task, honouring the experiment overrides.
[[nodiscard]] TrainerConfig resolve_trainer_config(const ExperimentConfig& config,
                                                   const OfflineDataset& dataset);

struct TrialResult {
  int trial = 0;
  std::uint64_t seed = 0;
  BudgetScore score;
  StabilityCurve curve;
  std::vector<EpochLog> log;
  CandidateSet candidates;
  double best_dataset_score = 0.0;
};

struct Aggregates {
  double mean = 0.0;
  double std = 0.0;  // population
};

[[nodiscard]] Aggregates aggregate(const std::vector<double>& values);

struct EvaluationReport {
  std::string method;
  std::string task;
  Eigen::Index budget = 0;
  std::vector<TrialResult> trials;
  Aggregates p100;
  Aggregates p50;
  Aggregates normalized_p100;
  Aggregates normalized_p50;
};

/// Curate -> train -> produce candidates -> evaluate, for each trial.
[[nodiscard]] TrialResult run_trial(const ExperimentConfig& config, const TaskSpec& task,
                                    const OfflineDataset& dataset, int trial);
[[nodiscard]] EvaluationReport run_trials(const ExperimentConfig& config);
[[nodiscard]] EvaluationReport run_trials(const ExperimentConfig& config, const TaskSpec& task,
                                          const OfflineDataset& dataset);
/// Runs the experiment and writes config.txt, report.json, training_log.csv,
/// candidates.csv and curves/trial_<k>.csv into `run_dir`.
EvaluationReport run_experiment(const ExperimentConfig& config, const std::filesystem::path& run_dir);

[[nodiscard]] std::string report_json(const EvaluationReport& report);

}  // namespace coms
