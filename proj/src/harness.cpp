#include "coms/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "coms/io.hpp"

namespace coms {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double to_double(std::string_view key, std::string_view value) {
  const std::string text(value);
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0') {
    throw std::invalid_argument(fmt::format("config key '{}': '{}' is not a number", key, value));
  }
  return v;
}

template <class Int>
Int to_int(std::string_view key, std::string_view value) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw std::invalid_argument(fmt::format("config key '{}': '{}' is not an integer", key, value));
  }
  return out;
}

std::vector<int> to_int_list(std::string_view key, std::string_view value) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const auto piece = trim(value.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                : comma - start));
    if (!piece.empty()) out.push_back(to_int<int>(key, piece));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "task",          "method",        "trials",      "seed",        "budget",
      "t_max",         "ensemble_size", "n_raw_samples", "keep_percentile", "curation_seed",
      "smoothing",     "epochs",        "batch_size",  "ascent_steps", "ascent_rate",
      "adam_lr",       "tau",           "alpha_lr",    "alpha_init",  "hidden_widths",
      "leak"};
  return keys;
}

}  // namespace

std::string_view method_name(Method method) {
  switch (method) {
    case Method::kComs: return "coms";
    case Method::kGradNaive: return "grad-naive";
    case Method::kGradMin: return "grad-min";
    case Method::kGradMean: return "grad-mean";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "coms") return Method::kComs;
  if (name == "grad-naive" || name == "grad") return Method::kGradNaive;
  if (name == "grad-min") return Method::kGradMin;
  if (name == "grad-mean") return Method::kGradMean;
  throw std::invalid_argument(
      fmt::format("unknown method '{}' (expected coms, grad-naive, grad-min or grad-mean)", name));
}

double normalized_score(double y, ScoreBounds bounds) {
  if (!(bounds.max > bounds.min)) throw ContractViolation("normalized_score: degenerate bounds");
  return (y - bounds.min) / (bounds.max - bounds.min);
}

double median(std::vector<double> values) {
  if (values.empty()) throw ContractViolation("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double StabilityCurve::min_score() const {
  return *std::min_element(true_scores.begin(), true_scores.end());
}

std::vector<double> true_scores(const CandidateSet& candidates, const TaskSpec& task,
                                const OfflineDataset& dataset) {
  const Matrix raw = dataset.stats.denormalize_designs(candidates.designs);
  std::vector<double> scores;
  scores.reserve(static_cast<std::size_t>(raw.cols()));
  for (Eigen::Index i = 0; i < raw.cols(); ++i) scores.push_back(task.score_design(raw.col(i)));
  return scores;
}

namespace {

std::vector<Eigen::Index> candidate_ranking(const CandidateSet& candidates) {
  if (candidates.predictions.size() == candidates.size()) return rank_by_prediction(candidates);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(candidates.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  return order;
}

BudgetScore score_prefix(const std::vector<double>& ranked_scores, Eigen::Index budget,
                         ScoreBounds bounds) {
  const std::vector<double> prefix(ranked_scores.begin(),
                                   ranked_scores.begin() + static_cast<std::ptrdiff_t>(budget));
  BudgetScore s;
  s.budget = budget;
  s.p100 = *std::max_element(prefix.begin(), prefix.end());
  s.p50 = median(prefix);
  s.normalized_p100 = normalized_score(s.p100, bounds);
  s.normalized_p50 = normalized_score(s.p50, bounds);
  return s;
}

std::vector<double> ranked_true_scores(const CandidateSet& candidates, const TaskSpec& task,
                                       const OfflineDataset& dataset) {
  const std::vector<double> scores = true_scores(candidates, task, dataset);
  std::vector<double> ranked;
  ranked.reserve(scores.size());
  for (Eigen::Index i : candidate_ranking(candidates)) ranked.push_back(scores[static_cast<std::size_t>(i)]);
  return ranked;
}

}  // namespace

BudgetScore evaluate_budget(const CandidateSet& candidates, const TaskSpec& task,
                            const OfflineDataset& dataset, Eigen::Index budget) {
  if (budget < 1 || budget > candidates.size()) {
    throw ContractViolation(fmt::format("evaluate_budget: budget {} with {} candidates", budget,
                                        candidates.size()));
  }
  return score_prefix(ranked_true_scores(candidates, task, dataset), budget,
                      dataset.oracle_bounds.value_or(task.bounds()));
}

std::vector<BudgetScore> budget_sweep(const CandidateSet& candidates, const TaskSpec& task,
                                      const OfflineDataset& dataset,
                                      const std::vector<Eigen::Index>& budgets) {
  for (Eigen::Index b : budgets) {
    if (b < 1 || b > candidates.size()) {
      throw ContractViolation(fmt::format("budget_sweep: budget {} exceeds {} candidates", b,
                                          candidates.size()));
    }
  }
  const std::vector<double> ranked = ranked_true_scores(candidates, task, dataset);
  const ScoreBounds bounds = dataset.oracle_bounds.value_or(task.bounds());
  std::vector<BudgetScore> out;
  out.reserve(budgets.size());
  for (Eigen::Index b : budgets) out.push_back(score_prefix(ranked, b, bounds));
  return out;
}

std::vector<TauCurve> tau_sweep(const OfflineDataset& dataset, const TaskSpec& task,
                                const std::vector<double>& taus, const TrainerConfig& base,
                                int t_max) {
  if (t_max < base.ascent_steps) throw ContractViolation("tau_sweep: t_max must be >= ascent_steps");
  const CandidateSet seed = select_initializations(dataset, 1);
  std::vector<TauCurve> out;
  for (double tau : taus) {
    if (!(tau > 0.0)) throw ContractViolation("tau_sweep: tau values must be > 0");
    TrainerConfig config = base;
    config.tau = tau;
    const TrainingResult trained = train(dataset, config);
    out.push_back({tau, trained.lagrange.alpha,
                   stability_sweep(trained.model, task, dataset, seed.designs.col(0),
                                   config.ascent_rate, t_max)});
  }
  return out;
}

// ---- config -------------------------------------------------------------

bool apply_config_entry(ExperimentConfig& config, std::string_view key, std::string_view value) {
  TrainerConfig& tc = config.trainer;
  if (key == "task") {
    (void)make_task(value);
    config.task = std::string(value);
  } else if (key == "method") {
    config.method = parse_method(value);
  } else if (key == "trials") {
    config.trials = to_int<int>(key, value);
  } else if (key == "seed") {
    config.seed = to_int<std::uint64_t>(key, value);
  } else if (key == "budget") {
    config.budget = to_int<Eigen::Index>(key, value);
  } else if (key == "t_max") {
    config.t_max = to_int<int>(key, value);
  } else if (key == "ensemble_size") {
    config.ensemble_size = to_int<int>(key, value);
  } else if (key == "n_raw_samples") {
    config.curation.n_raw_samples = to_int<int>(key, value);
  } else if (key == "keep_percentile") {
    config.curation.keep_percentile = to_double(key, value);
  } else if (key == "curation_seed") {
    config.curation.seed = to_int<std::uint64_t>(key, value);
  } else if (key == "smoothing") {
    config.curation.smoothing = to_double(key, value);
  } else if (key == "epochs") {
    tc.epochs = to_int<int>(key, value);
  } else if (key == "batch_size") {
    tc.batch_size = to_int<int>(key, value);
  } else if (key == "ascent_steps") {
    tc.ascent_steps = to_int<int>(key, value);
  } else if (key == "ascent_rate") {
    config.ascent_rate = to_double(key, value);
  } else if (key == "adam_lr") {
    tc.adam_lr = to_double(key, value);
  } else if (key == "tau") {
    config.tau = to_double(key, value);
  } else if (key == "alpha_lr") {
    tc.alpha_lr = to_double(key, value);
  } else if (key == "alpha_init") {
    tc.alpha_init = to_double(key, value);
  } else if (key == "hidden_widths") {
    tc.hidden_widths = to_int_list(key, value);
  } else if (key == "leak") {
    tc.leak = to_double(key, value);
  } else {
    return false;
  }
  return true;
}

std::vector<std::string> experiment_config_keys() { return known_keys(); }

ExperimentConfig parse_experiment_config(std::string_view text) {
  ExperimentConfig config;
  std::vector<std::string> unknown;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(fmt::format("config line {}: expected key=value", line_no));
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (!apply_config_entry(config, key, value)) unknown.push_back(key);
  }
  if (!unknown.empty()) {
    throw std::invalid_argument(fmt::format("unknown config keys: {}", fmt::join(unknown, ", ")));
  }
  return config;
}

std::string format_experiment_config(const ExperimentConfig& config) {
  const TrainerConfig& tc = config.trainer;
  std::string out;
  auto put = [&](std::string_view key, const std::string& value) {
    out += fmt::format("{}={}\n", key, value);
  };
  put("task", config.task);
  put("method", std::string(method_name(config.method)));
  put("trials", std::to_string(config.trials));
  put("seed", std::to_string(config.seed));
  put("budget", std::to_string(config.budget));
  put("t_max", std::to_string(config.t_max));
  put("ensemble_size", std::to_string(config.ensemble_size));
  put("n_raw_samples", std::to_string(config.curation.n_raw_samples));
  put("keep_percentile", io::format_double(config.curation.keep_percentile));
  put("curation_seed", std::to_string(config.curation.seed));
  put("smoothing", io::format_double(config.curation.smoothing));
  put("epochs", std::to_string(tc.epochs));
  put("batch_size", std::to_string(tc.batch_size));
  put("ascent_steps", std::to_string(tc.ascent_steps));
  if (config.ascent_rate) put("ascent_rate", io::format_double(*config.ascent_rate));
  put("adam_lr", io::format_double(tc.adam_lr));
  if (config.tau) put("tau", io::format_double(*config.tau));
  put("alpha_lr", io::format_double(tc.alpha_lr));
  put("alpha_init", io::format_double(tc.alpha_init));
  put("hidden_widths", fmt::format("{}", fmt::join(tc.hidden_widths, ",")));
  put("leak", io::format_double(tc.leak));
  return out;
}

TrainerConfig resolve_trainer_config(const ExperimentConfig& config, const OfflineDataset& dataset) {
  const TrainerConfig defaults = TrainerConfig::defaults_for(dataset);
  TrainerConfig tc = config.trainer;
  tc.tau = config.tau.value_or(defaults.tau);
  tc.ascent_rate = config.ascent_rate.value_or(defaults.ascent_rate);
  return tc;
}

// ---- orchestration ------------------------------------------------------

Aggregates aggregate(const std::vector<double>& values) {
  if (values.empty()) return {};
  Aggregates a;
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - a.mean) * (v - a.mean);
  a.std = std::sqrt(ss / static_cast<double>(values.size()));
  return a;
}

TrialResult run_trial(const ExperimentConfig& config, const TaskSpec& task,
                      const OfflineDataset& dataset, int trial) {
  TrainerConfig tc = resolve_trainer_config(config, dataset);
  tc.seed = config.seed + static_cast<std::uint64_t>(trial);

  TrialResult result;
  result.trial = trial;
  result.seed = tc.seed;
  result.best_dataset_score = dataset.raw_scores().maxCoeff();
  const CandidateSet argmax_seed = select_initializations(dataset, 1);

  auto finish = [&](const auto& surrogate) {
    result.candidates = produce_candidates(surrogate, dataset, config.budget, tc.ascent_rate, tc.ascent_steps);
    result.score = evaluate_budget(result.candidates, task, dataset, config.budget);
    result.curve = stability_sweep(surrogate, task, dataset, argmax_seed.designs.col(0), tc.ascent_rate,
                                   std::max(config.t_max, tc.ascent_steps));
  };

  switch (config.method) {
    case Method::kComs: {
      TrainingResult trained = train(dataset, tc);
      result.log = std::move(trained.log);
      finish(trained.model);
      break;
    }
    case Method::kGradNaive: {
      TrainingResult trained = train_naive(dataset, tc);
      result.log = std::move(trained.log);
      finish(trained.model);
      break;
    }
    case Method::kGradMin:
    case Method::kGradMean: {
      const Ensemble ensemble = train_ensemble(
          dataset, tc, config.ensemble_size,
          config.method == Method::kGradMin ? Aggregate::kMin : Aggregate::kMean);
      finish(ensemble);
      break;
    }
  }
  return result;
}

EvaluationReport run_trials(const ExperimentConfig& config) {
  const TaskSpec task = make_task(config.task);
  return run_trials(config, task, curate_dataset(task, config.curation));
}

EvaluationReport run_trials(const ExperimentConfig& config, const TaskSpec& task,
                            const OfflineDataset& dataset) {
  if (config.trials < 1) throw ContractViolation("experiment needs at least one trial");
  EvaluationReport report;
  report.method = std::string(method_name(config.method));
  report.task = config.task;
  report.budget = config.budget;
  for (int trial = 0; trial < config.trials; ++trial) {
    report.trials.push_back(run_trial(config, task, dataset, trial));
  }
  auto collect = [&](auto member) {
    std::vector<double> values;
    for (const TrialResult& t : report.trials) values.push_back(t.score.*member);
    return aggregate(values);
  };
  report.p100 = collect(&BudgetScore::p100);
  report.p50 = collect(&BudgetScore::p50);
  report.normalized_p100 = collect(&BudgetScore::normalized_p100);
  report.normalized_p50 = collect(&BudgetScore::normalized_p50);
  return report;
}

std::string report_json(const EvaluationReport& report) {
  nlohmann::ordered_json j;
  j["method"] = report.method;
  j["task"] = report.task;
  j["budget"] = report.budget;
  auto agg = [](const Aggregates& a) {
    nlohmann::ordered_json o;
    o["mean"] = a.mean;
    o["std"] = a.std;
    return o;
  };
  j["p100"] = agg(report.p100);
  j["p50"] = agg(report.p50);
  j["normalized_p100"] = agg(report.normalized_p100);
  j["normalized_p50"] = agg(report.normalized_p50);
  j["trials"] = nlohmann::ordered_json::array();
  for (const TrialResult& t : report.trials) {
    nlohmann::ordered_json o;
    o["trial"] = t.trial;
    o["seed"] = t.seed;
    o["p100"] = t.score.p100;
    o["p50"] = t.score.p50;
    o["normalized_p100"] = t.score.normalized_p100;
    o["normalized_p50"] = t.score.normalized_p50;
    o["best_dataset_score"] = t.best_dataset_score;
    o["final_alpha"] = t.log.empty() ? 0.0 : t.log.back().alpha;
    o["curve_final_score"] = t.curve.final_score();
    o["truncated_candidates"] = t.candidates.truncated_count;
    j["trials"].push_back(std::move(o));
  }
  return j.dump(2) + "\n";
}

EvaluationReport run_experiment(const ExperimentConfig& config, const std::filesystem::path& run_dir) {
  const TaskSpec task = make_task(config.task);
  const OfflineDataset dataset = curate_dataset(task, config.curation);
  EvaluationReport report = run_trials(config, task, dataset);
  std::filesystem::create_directories(run_dir / "curves");
  io::write_text(run_dir / "config.txt", format_experiment_config(config));
  io::write_text(run_dir / "report.json", report_json(report));
  std::ofstream log(run_dir / "training_log.csv", std::ios::trunc);
  std::ofstream candidates(run_dir / "candidates.csv", std::ios::trunc);
  bool first = true;
  for (const TrialResult& t : report.trials) {
    io::write_training_log(log, t.log, report.method, t.trial, first);
    io::write_candidates(candidates, t.candidates, dataset, report.method, t.trial, first);
    first = false;
    std::ofstream curve(run_dir / "curves" / fmt::format("trial_{}.csv", t.trial), std::ios::trunc);
    io::write_curve(curve, t.curve);
  }
  return report;
}

}  // namespace coms
