#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "coms/dataset.hpp"
#include "coms/harness.hpp"
#include "coms/net.hpp"
#include "coms/optimizer.hpp"
#include "coms/tasks.hpp"
#include "coms/trainer.hpp"

namespace coms::io {

/// Shortest text that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

/// Raw designs plus `y` per row (letter indices s0..s{L-1} when discrete) and a
/// `<path>.meta.json` sidecar with normalization stats and withheld oracle bounds.
void write_dataset(const std::filesystem::path& path, const OfflineDataset& dataset,
                   const TaskSpec& task, double smoothing = kDefaultSmoothing);

struct LoadedDataset {
  OfflineDataset dataset;
  std::string task_name;
  double smoothing = kDefaultSmoothing;
};
[[nodiscard]] LoadedDataset read_dataset(const std::filesystem::path& path);

[[nodiscard]] std::filesystem::path sidecar_path(const std::filesystem::path& dataset_path);

/// One candidate per row in denormalized model-space coordinates, followed by
/// provenance and surrogate prediction; optional leading method/trial columns.
void write_candidates(std::ostream& out, const CandidateSet& candidates, const OfflineDataset& dataset,
                      const std::string& method = {}, int trial = -1, bool header = true);
void write_candidates(const std::filesystem::path& path, const CandidateSet& candidates,
                      const OfflineDataset& dataset, const std::string& method = {});
[[nodiscard]] CandidateSet read_candidates(const std::filesystem::path& path,
                                           const OfflineDataset& dataset);

void write_training_log(std::ostream& out, const std::vector<EpochLog>& log,
                        const std::string& method = {}, int trial = -1, bool header = true);

void write_curve(std::ostream& out, const StabilityCurve& curve);
void write_budget_sweep(std::ostream& out, const std::vector<BudgetScore>& sweep);

void save_model(const std::filesystem::path& path, const ObjectiveModel& model);
[[nodiscard]] ObjectiveModel load_model(const std::filesystem::path& path);

[[nodiscard]] std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace coms::io
