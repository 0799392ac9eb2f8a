#include "coms/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>

#include <fmt/format.h>
#include <unistd.h>

#include "coms/baselines.hpp"
#include "coms/harness.hpp"
#include "coms/io.hpp"
#include "coms/tasks.hpp"
#include "coms/trainer.hpp"

namespace coms::acceptance {

double max_relative_error(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ContractViolation("max_relative_error: size mismatch");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a(i)), std::abs(b(i)), 1e-6});
    worst = std::max(worst, std::abs(a(i) - b(i)) / denom);
  }
  return worst;
}

Vector finite_difference(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector grad(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

std::string format_line(const CriterionResult& r) {
  return fmt::format("[{}] C{} {} ({:.1f} s): {}", r.passed ? "PASS" : "FAIL", r.id, r.title,
                     r.seconds, r.detail);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Reports gathered by the heavier criteria, re-checked by the protocol criterion.
struct Shared {
  std::vector<EvaluationReport> reports;
};

// ---- 1: gradients ---------------------------------------------------------

struct Architecture {
  int input_dim;
  std::vector<int> hidden;
};

double reference_loss(const ObjectiveModel& model, const LossBatch& batch, LossKind kind) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const double f = model.forward(batch.designs.col(i));
    const double term = kind == LossKind::kHalfSquaredError
                            ? 0.5 * (f - batch.targets(i)) * (f - batch.targets(i))
                            : f;
    total += batch.weights(i) * term;
  }
  return total / static_cast<double>(batch.size());
}

CriterionResult check_gradients() {
  const std::vector<Architecture> archs{{1, {}}, {3, {5}}, {8, {16, 16}}, {24, {32, 32}}};
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto randn = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
  };

  double worst_param = 0.0;
  double worst_input = 0.0;
  int pairs = 0;
  for (const Architecture& arch : archs) {
    for (int k = 0; k < kGradientPairsPerArch; ++k) {
      const ObjectiveModel model = ObjectiveModel::make_mlp(
          arch.input_dim, arch.hidden, static_cast<std::uint64_t>(1000 * pairs + k));
      const LossBatch batch{randn(arch.input_dim, 4), randn(4, 1).col(0),
                            randn(4, 1).col(0).cwiseAbs()};
      for (LossKind kind : {LossKind::kHalfSquaredError, LossKind::kSignedLinear}) {
        const Vector analytic = flatten(model.param_gradients(batch, kind));
        ObjectiveModel probe = model;
        ParameterSet scratch = model.layers();
        const Vector numeric = finite_difference(
            [&](const Vector& theta) {
              unflatten(theta, scratch);
              probe.mutable_layers() = scratch;
              return reference_loss(probe, batch, kind);
            },
            flatten(model.layers()));
        worst_param = std::max(worst_param, max_relative_error(analytic, numeric));
      }
      const DesignVector x = randn(arch.input_dim, 1).col(0);
      const Vector numeric_x =
          finite_difference([&](const Vector& v) { return model.forward(v); }, x);
      worst_input = std::max(worst_input, max_relative_error(model.input_gradient(x), numeric_x));
      worst_input = std::max(worst_input, max_relative_error(model.input_gradient_batch(batch.designs).col(0),
                                                             model.input_gradient(batch.designs.col(0))));
      ++pairs;
    }
  }
  CriterionResult r;
  r.passed = worst_param <= kGradientRelTol && worst_input <= kGradientRelTol;
  r.detail = fmt::format("{} pairs over {} architectures; worst relative error params {:.2e}, inputs {:.2e} (tol {:.0e})",
                         pairs, archs.size(), worst_param, worst_input, kGradientRelTol);
  return r;
}

// ---- 2: conservatism ------------------------------------------------------

CriterionResult check_conservatism() {
  bool ok = true;
  std::vector<std::string> parts;
  for (const char* name : {"bowl", "cliff", "pwm"}) {
    const TaskSpec task = make_task(name);
    const OfflineDataset dataset = curate_dataset(task, CurationConfig{});

    TrainerConfig fixed = TrainerConfig::defaults_for(dataset);
    fixed.alpha_init = kFixedAlpha;
    fixed.alpha_lr = 0.0;
    const TrainingResult fixed_run = train(dataset, fixed);
    const double fixed_gap =
        conservatism_gap(fixed_run.model, dataset, fixed.ascent_rate, fixed.ascent_steps);

    const TrainerConfig dual = TrainerConfig::defaults_for(dataset);
    const TrainingResult dual_run = train(dataset, dual);
    const double dual_gap = dual_run.log.back().gap;

    const bool fixed_ok = fixed_gap <= kFixedAlphaGapTol;
    const bool dual_ok = dual_gap <= dual.tau + kDualGapSlack;
    ok = ok && fixed_ok && dual_ok;
    parts.push_back(fmt::format("{}: fixed gap {:.4g}{} dual gap {:.4g}{} (tau {})", name, fixed_gap,
                                fixed_ok ? "" : " [over]", dual_gap, dual_ok ? "" : " [over]", dual.tau));
  }
  CriterionResult r;
  r.passed = ok;
  r.detail = fmt::format("{}", fmt::join(parts, "; "));
  return r;
}

// ---- 3: baseline equivalence ----------------------------------------------

// Plain minibatch regression written against the public primitives only.
ObjectiveModel reference_regression(const OfflineDataset& dataset, const TrainerConfig& config) {
  ObjectiveModel model = ObjectiveModel::make_mlp(static_cast<int>(dataset.dim()),
                                                  config.hidden_widths, config.seed, config.leak);
  AdamState adam = make_adam(model.layers(), config.adam_lr);
  std::mt19937_64 rng(config.seed ^ kShuffleSalt);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(dataset.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const auto n = static_cast<Eigen::Index>(stop - start);
      LossBatch batch{Matrix(dataset.dim(), n), Vector(n), Vector::Ones(n)};
      for (Eigen::Index i = 0; i < n; ++i) {
        batch.designs.col(i) = dataset.designs.col(order[start + static_cast<std::size_t>(i)]);
        batch.targets(i) = dataset.scores(order[start + static_cast<std::size_t>(i)]);
      }
      adam_step(adam, model.mutable_layers(), model.param_gradients(batch, LossKind::kHalfSquaredError));
    }
  }
  return model;
}

bool bitwise_equal(const ParameterSet& a, const ParameterSet& b) {
  const Vector fa = flatten(a);
  const Vector fb = flatten(b);
  return fa.size() == fb.size() &&
         std::equal(fa.data(), fa.data() + fa.size(), fb.data(),
                    [](double x, double y) { return std::memcmp(&x, &y, sizeof(double)) == 0; });
}

CriterionResult check_equivalence() {
  bool ok = true;
  std::vector<std::string> parts;
  for (const char* name : {"cliff", "pwm"}) {
    const TaskSpec task = make_task(name);
    const OfflineDataset dataset = curate_dataset(task, CurationConfig{});
    TrainerConfig config = TrainerConfig::defaults_for(dataset);
    config.epochs = 10;
    config.seed = 3;
    config.alpha_init = 0.0;
    config.alpha_lr = 0.0;
    const TrainingResult coms = train(dataset, config);
    const TrainingResult naive = train_naive(dataset, config);
    const ObjectiveModel reference = reference_regression(dataset, config);
    const bool same_naive = bitwise_equal(coms.model.layers(), naive.model.layers());
    const bool same_reference = bitwise_equal(coms.model.layers(), reference.layers());
    ok = ok && same_naive && same_reference;
    parts.push_back(fmt::format("{}: vs naive {}, vs reference loop {}", name,
                                same_naive ? "identical" : "DIFFERENT",
                                same_reference ? "identical" : "DIFFERENT"));
  }
  CriterionResult r;
  r.passed = ok;
  r.detail = fmt::format("{}", fmt::join(parts, "; "));
  return r;
}

// ---- 4: stability ---------------------------------------------------------

CriterionResult check_stability(Shared& shared) {
  const TaskSpec task = make_task("cliff");
  const OfflineDataset dataset = curate_dataset(task, CurationConfig{});
  ExperimentConfig config;
  config.task = "cliff";
  config.trials = kStabilityTrials;
  config.t_max = kStabilityTMax;

  config.method = Method::kComs;
  const EvaluationReport coms = run_trials(config, task, dataset);
  config.method = Method::kGradNaive;
  const EvaluationReport naive = run_trials(config, task, dataset);

  int wins = 0;
  int off_manifold = 0;
  std::vector<std::string> finals;
  for (int k = 0; k < kStabilityTrials; ++k) {
    const StabilityCurve& c = coms.trials[static_cast<std::size_t>(k)].curve;
    const StabilityCurve& n = naive.trials[static_cast<std::size_t>(k)].curve;
    if (c.final_score() > n.final_score()) ++wins;
    if (n.min_score() < kOffManifoldScore) ++off_manifold;
    finals.push_back(fmt::format("{:.2f}/{:.2f}", c.final_score(), n.final_score()));
  }
  shared.reports.push_back(coms);
  shared.reports.push_back(naive);

  CriterionResult r;
  r.passed = wins >= kStabilityWinsRequired && off_manifold >= 1;
  r.detail = fmt::format(
      "COMs beats naive at t={} in {}/{} (need {}); naive below {} in {}/{} (need 1); final coms/naive {}",
      kStabilityTMax, wins, kStabilityTrials, kStabilityWinsRequired, kOffManifoldScore, off_manifold,
      kStabilityTrials, fmt::join(finals, " "));
  return r;
}

// ---- 5 and 6: discrete task -----------------------------------------------

struct DiscreteRun {
  TaskSpec task;
  OfflineDataset dataset;
  EvaluationReport report;
};

const DiscreteRun& discrete_run(std::optional<DiscreteRun>& cache) {
  if (!cache) {
    DiscreteRun run{make_task("pwm"), {}, {}};
    run.dataset = curate_dataset(run.task, CurationConfig{});
    ExperimentConfig config;
    config.task = "pwm";
    config.method = Method::kComs;
    config.trials = kDiscreteTrials;
    config.budget = kDiscreteBudget;
    run.report = run_trials(config, run.task, run.dataset);
    cache = std::move(run);
  }
  return *cache;
}

CriterionResult check_discrete(const DiscreteRun& run) {
  std::vector<double> all;
  for (const Sequence& s : enumerate_sequences(run.task.shape)) all.push_back(run.task.oracle(s));
  const double allowed_better = kTopFraction * static_cast<double>(all.size());
  auto in_top = [&](double score) {
    const auto better = std::count_if(all.begin(), all.end(), [&](double v) { return v > score; });
    return static_cast<double>(better) < allowed_better;
  };
  int top = 0;
  int beats = 0;
  std::vector<std::string> bests;
  for (const TrialResult& t : run.report.trials) {
    if (in_top(t.score.p100)) ++top;
    if (t.score.p100 > t.best_dataset_score) ++beats;
    bests.push_back(fmt::format("{:.3f}", t.score.p100));
  }
  CriterionResult r;
  r.passed = top >= kDiscreteWinsRequired && beats >= kDiscreteWinsRequired;
  r.detail = fmt::format(
      "best of N={} in true top {:.0f}% in {}/{} (need {}); beats best training score {:.3f} in {}/{} (need {}); "
      "global max {:.3f}; bests {}",
      kDiscreteBudget, 100 * kTopFraction, top, kDiscreteTrials, kDiscreteWinsRequired,
      run.report.trials.front().best_dataset_score, beats, kDiscreteTrials, kDiscreteWinsRequired,
      *std::max_element(all.begin(), all.end()), fmt::join(bests, " "));
  return r;
}

bool monotone(const std::vector<BudgetScore>& sweep) {
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    if (sweep[i].p100 < sweep[i - 1].p100) return false;
  }
  return true;
}

CriterionResult check_budget(const DiscreteRun& run) {
  const std::vector<Eigen::Index> budgets{1, 2, 4, 8, 16};
  std::vector<double> mean_p100(budgets.size(), 0.0);
  bool all_monotone = true;
  for (const TrialResult& t : run.report.trials) {
    const auto sweep = budget_sweep(t.candidates, run.task, run.dataset, budgets);
    all_monotone = all_monotone && monotone(sweep);
    for (std::size_t i = 0; i < budgets.size(); ++i) {
      mean_p100[i] += sweep[i].p100 / static_cast<double>(run.report.trials.size());
    }
  }
  const double target = kBudgetFraction * mean_p100.back();
  std::optional<Eigen::Index> reached;
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (mean_p100[i] >= target) {
      reached = budgets[i];
      break;
    }
  }
  CriterionResult r;
  r.passed = all_monotone && reached && *reached <= kBudgetReachBy;
  r.detail = fmt::format("sweep monotone in every trial: {}; mean p100 over N={{1,2,4,8,16}}: {:.3f}; "
                         "{:.0f}% of N=16 reached at N={} (need <= {})",
                         all_monotone ? "yes" : "no", fmt::join(mean_p100, ", "), 100 * kBudgetFraction,
                         reached ? std::to_string(*reached) : "never", kBudgetReachBy);
  return r;
}

// ---- 7: tau sweep ---------------------------------------------------------

CriterionResult check_tau() {
  const std::vector<double> taus{0.1, 0.5, 2.0};
  const TaskSpec task = make_task("cliff");
  const OfflineDataset dataset = curate_dataset(task, CurationConfig{});
  std::vector<double> mean_final(taus.size(), 0.0);
  for (int k = 0; k < kTauTrials; ++k) {
    TrainerConfig base = TrainerConfig::defaults_for(dataset);
    base.seed = static_cast<std::uint64_t>(k);
    const auto curves = tau_sweep(dataset, task, taus, base, kStabilityTMax);
    for (std::size_t i = 0; i < taus.size(); ++i) {
      mean_final[i] += curves[i].curve.final_score() / kTauTrials;
    }
  }
  CriterionResult r;
  r.passed = mean_final.back() >= mean_final.front();
  r.detail = fmt::format("mean final true score over {} trials for tau {{{}}}: {:.3f}",
                         kTauTrials, fmt::join(taus, ", "), fmt::join(mean_final, ", "));
  return r;
}

// ---- 8: protocol invariants -----------------------------------------------

std::vector<std::pair<std::string, std::string>> directory_contents(const std::filesystem::path& dir) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) {
      files.emplace_back(std::filesystem::relative(entry.path(), dir).string(),
                         io::read_text(entry.path()));
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

CriterionResult check_protocol(const Shared& shared) {
  std::vector<std::string> failures;

  ExperimentConfig config;
  config.task = "cliff";
  config.trials = 2;
  config.budget = 16;
  config.t_max = 60;
  config.trainer.epochs = 5;
  const auto base = std::filesystem::temp_directory_path() / fmt::format("coms_accept_{}", ::getpid());
  std::filesystem::remove_all(base);
  const EvaluationReport first = run_experiment(config, base / "a");
  (void)run_experiment(config, base / "b");
  const bool identical = directory_contents(base / "a") == directory_contents(base / "b");
  const std::size_t file_count = directory_contents(base / "a").size();
  std::filesystem::remove_all(base);
  if (!identical) failures.push_back("same-seed runs differ");

  std::vector<EvaluationReport> reports = shared.reports;
  reports.push_back(first);
  int entries = 0;
  for (const EvaluationReport& report : reports) {
    for (const TrialResult& t : report.trials) {
      ++entries;
      if (t.score.p100 < t.score.p50) {
        failures.push_back(fmt::format("{} trial {}: p100 < p50", report.method, t.trial));
      }
    }
  }

  const TaskSpec cliff = make_task("cliff");
  const OfflineDataset cliff_data = curate_dataset(cliff, config.curation);
  for (const TrialResult& t : first.trials) {
    std::vector<Eigen::Index> budgets(static_cast<std::size_t>(t.candidates.size()));
    std::iota(budgets.begin(), budgets.end(), Eigen::Index{1});
    if (!monotone(budget_sweep(t.candidates, cliff, cliff_data, budgets))) {
      failures.push_back(fmt::format("budget sweep not monotone in trial {}", t.trial));
    }
  }

  for (const char* name : {"bowl", "cliff", "pwm"}) {
    const TaskSpec task = make_task(name);
    double optimum = 0.0;
    if (task.is_discrete) {
      optimum = -std::numeric_limits<double>::infinity();
      for (const Sequence& s : enumerate_sequences(task.shape)) optimum = std::max(optimum, task.oracle(s));
    } else {
      optimum = task.oracle(DesignVector::Zero(task.input_dim));
    }
    const double normalized = normalized_score(optimum, task.bounds());
    if (normalized != 1.0) failures.push_back(fmt::format("{} optimum normalizes to {}", name, normalized));
  }

  CriterionResult r;
  r.passed = failures.empty();
  r.detail = failures.empty()
                 ? fmt::format("{} report entries with p100 >= p50; sweeps monotone; optimum scores 1.0; "
                               "{} artifact files byte-identical across same-seed runs",
                               entries, file_count)
                 : fmt::format("{}", fmt::join(failures, "; "));
  return r;
}

}  // namespace

std::vector<CriterionResult> run(const Options& options) {
  std::set<int> selected = options.only;
  if (selected.empty() || selected.count(9)) {
    for (int id = 1; id <= 9; ++id) selected.insert(id);
  }
  const auto suite_start = Clock::now();
  std::vector<CriterionResult> results;
  Shared shared;
  std::optional<DiscreteRun> discrete;

  auto record = [&](int id, std::string title, auto&& body) {
    if (!selected.count(id)) return;
    if (options.out) *options.out << fmt::format("running C{} {}...\n", id, title) << std::flush;
    const auto start = Clock::now();
    CriterionResult r;
    try {
      r = body();
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = fmt::format("error: {}", e.what());
    }
    r.id = id;
    r.title = std::move(title);
    r.seconds = seconds_since(start);
    if (options.out) *options.out << format_line(r) << "\n" << std::flush;
    results.push_back(std::move(r));
  };

  record(1, "gradient correctness", [&] {
    const auto start = Clock::now();
    CriterionResult r = check_gradients();
    const double elapsed = seconds_since(start);
    if (elapsed >= kGradientSeconds) r.passed = false;
    r.detail += fmt::format("; {:.2f} s (limit {:.0f} s)", elapsed, kGradientSeconds);
    return r;
  });
  record(2, "conservatism gap", [&] { return check_conservatism(); });
  record(3, "baseline equivalence", [&] { return check_equivalence(); });
  record(4, "stability on cliff", [&] {
    const auto start = Clock::now();
    CriterionResult r = check_stability(shared);
    const double elapsed = seconds_since(start);
    if (elapsed >= kStabilitySeconds) r.passed = false;
    r.detail += fmt::format("; {:.1f} s (limit {:.0f} s)", elapsed, kStabilitySeconds);
    return r;
  });
  record(5, "discrete brute-force on pwm", [&] {
    const DiscreteRun& run = discrete_run(discrete);
    shared.reports.push_back(run.report);
    return check_discrete(run);
  });
  record(6, "budget resilience on pwm", [&] { return check_budget(discrete_run(discrete)); });
  record(7, "tau sweep on cliff", [&] { return check_tau(); });
  record(8, "protocol invariants", [&] { return check_protocol(shared); });
  record(9, "end-to-end reproduce", [&] {
    CriterionResult r;
    const double elapsed = seconds_since(suite_start);
    int passed = 0;
    for (const CriterionResult& c : results) passed += c.passed ? 1 : 0;
    r.passed = passed == 8 && elapsed < kTotalSeconds;
    r.detail = fmt::format("{}/8 criteria passed; {:.1f} s total (limit {:.0f} s)", passed, elapsed,
                           kTotalSeconds);
    return r;
  });
  return results;
}

}  // namespace coms::acceptance
