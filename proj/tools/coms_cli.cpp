// Command-line front end: curate, train, optimize, evaluate, sweeps and the acceptance suite.
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "coms/acceptance.hpp"
#include "coms/baselines.hpp"
#include "coms/harness.hpp"
#include "coms/io.hpp"
#include "coms/tasks.hpp"
#include "coms/trainer.hpp"

namespace fs = std::filesystem;
using namespace coms;

namespace {

// Every experiment config key is also a flag: --keep-percentile maps to keep_percentile.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;

  void attach(CLI::App& app) {
    app.add_option("--config", config_file, "flat key=value config file")->check(CLI::ExistingFile);
    for (const std::string& key : experiment_config_keys()) {
      std::string flag = key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      app.add_option("--" + flag, values[key], fmt::format("override '{}'", key));
    }
  }

  [[nodiscard]] ExperimentConfig resolve() const {
    ExperimentConfig config =
        config_file.empty() ? ExperimentConfig{} : parse_experiment_config(io::read_text(config_file));
    for (const auto& [key, value] : values) {
      if (!value.empty()) apply_config_entry(config, key, value);
    }
    return config;
  }
};

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  return out;
}

nlohmann::ordered_json score_json(const BudgetScore& s) {
  nlohmann::ordered_json j;
  j["budget"] = s.budget;
  j["p100"] = s.p100;
  j["p50"] = s.p50;
  j["normalized_p100"] = s.normalized_p100;
  j["normalized_p50"] = s.normalized_p50;
  return j;
}

int check(bool ok, const std::string& what) {
  if (!ok) std::cerr << "check failed: " << what << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conservative objective models for offline model-based optimization"};
  app.require_subcommand(1);

  // curate
  ConfigFlags curate_flags;
  std::string curate_out;
  auto* curate = app.add_subcommand("curate", "sample a task and keep the low-scoring fraction");
  curate_flags.attach(*curate);
  curate->add_option("--out", curate_out, "dataset CSV")->required();

  // train
  ConfigFlags train_flags;
  std::string train_data;
  std::string train_model;
  std::string train_log;
  auto* train_cmd = app.add_subcommand("train", "fit a conservative or naive model");
  train_flags.attach(*train_cmd);
  train_cmd->add_option("--data", train_data, "dataset CSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--model-out", train_model, "model JSON")->required();
  train_cmd->add_option("--log-out", train_log, "per-epoch training log CSV");

  // optimize
  ConfigFlags opt_flags;
  std::string opt_data;
  std::string opt_model;
  std::string opt_out;
  auto* optimize = app.add_subcommand("optimize", "gradient ascent from the top dataset designs");
  opt_flags.attach(*optimize);
  optimize->add_option("--data", opt_data, "dataset CSV")->required()->check(CLI::ExistingFile);
  optimize->add_option("--model", opt_model, "model JSON")->required()->check(CLI::ExistingFile);
  optimize->add_option("--out", opt_out, "candidates CSV")->required();

  // evaluate
  std::string eval_data;
  std::string eval_candidates;
  Eigen::Index eval_budget = 0;
  auto* evaluate = app.add_subcommand("evaluate", "score the top-N candidates with the oracle");
  evaluate->add_option("--data", eval_data, "dataset CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--candidates", eval_candidates, "candidates CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--budget", eval_budget, "number of candidates scored (default: all)");

  // sweep-budget
  std::string sb_data;
  std::string sb_candidates;
  std::string sb_budgets = "1,2,4,8,16,32,64,128";
  std::string sb_out;
  auto* sweep_budget = app.add_subcommand("sweep-budget", "p100 over nested candidate budgets");
  sweep_budget->add_option("--data", sb_data, "dataset CSV")->required()->check(CLI::ExistingFile);
  sweep_budget->add_option("--candidates", sb_candidates, "candidates CSV")->required()->check(CLI::ExistingFile);
  sweep_budget->add_option("--budgets", sb_budgets, "comma-separated budgets");
  sweep_budget->add_option("--out", sb_out, "sweep CSV (default: stdout)");

  // stability
  ConfigFlags st_flags;
  std::string st_data;
  std::string st_model;
  std::string st_out;
  auto* stability = app.add_subcommand("stability", "true score of every ascent iterate from the best design");
  st_flags.attach(*stability);
  stability->add_option("--data", st_data, "dataset CSV")->required()->check(CLI::ExistingFile);
  stability->add_option("--model", st_model, "model JSON")->required()->check(CLI::ExistingFile);
  stability->add_option("--out", st_out, "curve CSV (default: stdout)");

  // sweep-tau
  ConfigFlags tau_flags;
  std::string tau_list = "0.1,0.5,2.0";
  std::string tau_out;
  auto* sweep_tau = app.add_subcommand("sweep-tau", "one conservative model and curve per tau");
  tau_flags.attach(*sweep_tau);
  sweep_tau->add_option("--taus", tau_list, "comma-separated tau values");
  sweep_tau->add_option("--out-dir", tau_out, "directory for tau_<value>.csv curves")->required();

  // run
  ConfigFlags run_flags;
  std::string run_dir;
  auto* run = app.add_subcommand("run", "full experiment with artifacts in a run directory");
  run_flags.attach(*run);
  run->add_option("--out-dir", run_dir, "run directory")->required();

  // reproduce
  std::string only;
  auto* reproduce = app.add_subcommand("reproduce", "run the acceptance suite");
  reproduce->add_option("--only", only, "comma-separated criterion ids (default: all)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*curate) {
      const ExperimentConfig config = curate_flags.resolve();
      const TaskSpec task = make_task(config.task);
      const OfflineDataset dataset = curate_dataset(task, config.curation);
      io::write_dataset(curate_out, dataset, task, config.curation.smoothing);
      std::cout << fmt::format("{} designs of {} written to {}\n", dataset.size(), task.name, curate_out);
      return 0;
    }
    if (*train_cmd) {
      const ExperimentConfig config = train_flags.resolve();
      const io::LoadedDataset loaded = io::read_dataset(train_data);
      TrainerConfig tc = resolve_trainer_config(config, loaded.dataset);
      tc.seed = config.seed;
      TrainingResult result;
      if (config.method == Method::kComs) {
        result = coms::train(loaded.dataset, tc);
      } else if (config.method == Method::kGradNaive) {
        result = train_naive(loaded.dataset, tc);
      } else {
        throw std::invalid_argument("train saves a single model; use 'run' for ensemble methods");
      }
      io::save_model(train_model, result.model);
      if (!train_log.empty()) {
        auto out = open_out(train_log);
        io::write_training_log(out, result.log);
      }
      const EpochLog& last = result.log.back();
      std::cout << fmt::format("epoch {}: mse {:.6g} gap {:.6g} alpha {:.6g}\n", last.epoch, last.mse,
                               last.gap, last.alpha);
      return check(std::isfinite(last.mse), "finite training loss");
    }
    if (*optimize) {
      const ExperimentConfig config = opt_flags.resolve();
      const io::LoadedDataset loaded = io::read_dataset(opt_data);
      const TrainerConfig tc = resolve_trainer_config(config, loaded.dataset);
      const ObjectiveModel model = io::load_model(opt_model);
      const Eigen::Index budget = std::min(config.budget, loaded.dataset.size());
      const CandidateSet candidates =
          produce_candidates(model, loaded.dataset, budget, tc.ascent_rate, tc.ascent_steps);
      io::write_candidates(opt_out, candidates, loaded.dataset);
      std::cout << fmt::format("{} candidates written to {} ({} truncated)\n", candidates.size(), opt_out,
                               candidates.truncated_count);
      return 0;
    }
    if (*evaluate) {
      const io::LoadedDataset loaded = io::read_dataset(eval_data);
      const TaskSpec task = make_task(loaded.task_name);
      const CandidateSet candidates = io::read_candidates(eval_candidates, loaded.dataset);
      const Eigen::Index budget = eval_budget > 0 ? eval_budget : candidates.size();
      const BudgetScore score = evaluate_budget(candidates, task, loaded.dataset, budget);
      std::cout << score_json(score).dump(2) << "\n";
      return check(score.p100 >= score.p50, "p100 >= p50");
    }
    if (*sweep_budget) {
      const io::LoadedDataset loaded = io::read_dataset(sb_data);
      const TaskSpec task = make_task(loaded.task_name);
      const CandidateSet candidates = io::read_candidates(sb_candidates, loaded.dataset);
      std::vector<Eigen::Index> budgets;
      for (int b : parse_int_list(sb_budgets)) {
        if (b <= candidates.size()) budgets.push_back(b);
      }
      const auto sweep = budget_sweep(candidates, task, loaded.dataset, budgets);
      if (sb_out.empty()) {
        io::write_budget_sweep(std::cout, sweep);
      } else {
        auto out = open_out(sb_out);
        io::write_budget_sweep(out, sweep);
      }
      bool monotone = true;
      for (std::size_t i = 1; i < sweep.size(); ++i) monotone = monotone && sweep[i].p100 >= sweep[i - 1].p100;
      return check(monotone, "budget sweep monotone");
    }
    if (*stability) {
      const ExperimentConfig config = st_flags.resolve();
      const io::LoadedDataset loaded = io::read_dataset(st_data);
      const TaskSpec task = make_task(loaded.task_name);
      const TrainerConfig tc = resolve_trainer_config(config, loaded.dataset);
      const ObjectiveModel model = io::load_model(st_model);
      const CandidateSet seed = select_initializations(loaded.dataset, 1);
      const StabilityCurve curve =
          stability_sweep(model, task, loaded.dataset, seed.designs.col(0), tc.ascent_rate, config.t_max);
      if (st_out.empty()) {
        io::write_curve(std::cout, curve);
      } else {
        auto out = open_out(st_out);
        io::write_curve(out, curve);
      }
      return check(!curve.truncated, "ascent stayed finite");
    }
    if (*sweep_tau) {
      const ExperimentConfig config = tau_flags.resolve();
      const TaskSpec task = make_task(config.task);
      const OfflineDataset dataset = curate_dataset(task, config.curation);
      TrainerConfig tc = resolve_trainer_config(config, dataset);
      tc.seed = config.seed;
      const auto curves = tau_sweep(dataset, task, parse_double_list(tau_list), tc, config.t_max);
      fs::create_directories(tau_out);
      for (const TauCurve& c : curves) {
        auto out = open_out(fs::path(tau_out) / fmt::format("tau_{}.csv", io::format_double(c.tau)));
        io::write_curve(out, c.curve);
        std::cout << fmt::format("tau {}: final alpha {:.6g}, final true score {:.6g}\n", c.tau,
                                 c.final_alpha, c.curve.final_score());
      }
      return 0;
    }
    if (*run) {
      const ExperimentConfig config = run_flags.resolve();
      const EvaluationReport report = run_experiment(config, run_dir);
      std::cout << report_json(report);
      bool ok = true;
      for (const TrialResult& t : report.trials) ok = ok && t.score.p100 >= t.score.p50;
      return check(ok, "p100 >= p50 in every trial");
    }
    if (*reproduce) {
      acceptance::Options options;
      for (int id : parse_int_list(only)) options.only.insert(id);
      options.out = &std::cout;
      const auto results = acceptance::run(options);
      const bool ok =
          std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
      std::cout << fmt::format("{}/{} criteria passed\n",
                               std::count_if(results.begin(), results.end(),
                                             [](const auto& r) { return r.passed; }),
                               results.size());
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
