#include "coms/io.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

namespace coms::io {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw std::runtime_error(fmt::format("cannot parse number '{}'", text));
  }
  return v;
}

std::vector<std::vector<std::string>> read_csv_body(const std::filesystem::path& path,
                                                    std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(fmt::format("{} is empty", path.string()));
  header = split_csv_line(line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
    if (rows.back().size() != header.size()) {
      throw std::runtime_error(fmt::format("{}: row {} has {} cells, header has {}", path.string(),
                                           rows.size(), rows.back().size(), header.size()));
    }
  }
  return rows;
}

json to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

std::string format_double(double value) { return fmt::format("{}", value); }

std::filesystem::path sidecar_path(const std::filesystem::path& dataset_path) {
  std::filesystem::path p = dataset_path;
  p += ".meta.json";
  return p;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << text;
}

void write_dataset(const std::filesystem::path& path, const OfflineDataset& dataset,
                   const TaskSpec& task, double smoothing) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  const Matrix raw = dataset.raw_designs();
  const Vector y = dataset.raw_scores();
  const int columns = dataset.is_discrete ? dataset.shape.length : static_cast<int>(dataset.dim());
  const char prefix = dataset.is_discrete ? 's' : 'x';
  for (int c = 0; c < columns; ++c) out << prefix << c << ',';
  out << "y\n";
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    if (dataset.is_discrete) {
      for (int letter : decode_sequence(raw.col(i), dataset.shape)) out << letter << ',';
    } else {
      for (Eigen::Index r = 0; r < raw.rows(); ++r) out << format_double(raw(r, i)) << ',';
    }
    out << format_double(y(i)) << '\n';
  }

  json meta;
  meta["task"] = task.name;
  meta["is_discrete"] = dataset.is_discrete;
  meta["length"] = dataset.shape.length;
  meta["alphabet"] = dataset.shape.alphabet;
  meta["smoothing"] = smoothing;
  meta["x_mean"] = to_json(dataset.stats.x_mean);
  meta["x_std"] = to_json(dataset.stats.x_std);
  meta["y_mean"] = dataset.stats.y_mean;
  meta["y_std"] = dataset.stats.y_std;
  const ScoreBounds bounds = dataset.oracle_bounds.value_or(task.bounds());
  meta["oracle_min"] = bounds.min;
  meta["oracle_max"] = bounds.max;
  write_text(sidecar_path(path), meta.dump(2) + "\n");
}

LoadedDataset read_dataset(const std::filesystem::path& path) {
  const json meta = json::parse(read_text(sidecar_path(path)));
  LoadedDataset loaded;
  loaded.task_name = meta.at("task").get<std::string>();
  loaded.smoothing = meta.at("smoothing").get<double>();
  const bool is_discrete = meta.at("is_discrete").get<bool>();
  const DiscreteShape shape{meta.at("length").get<int>(), meta.at("alphabet").get<int>()};
  NormalizationStats stats;
  stats.x_mean = vector_from_json(meta.at("x_mean"));
  stats.x_std = vector_from_json(meta.at("x_std"));
  stats.y_mean = meta.at("y_mean").get<double>();
  stats.y_std = meta.at("y_std").get<double>();

  std::vector<std::string> header;
  const auto rows = read_csv_body(path, header);
  if (header.empty() || header.back() != "y") throw std::runtime_error("dataset CSV must end with a y column");
  const auto n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index dim = stats.x_mean.size();
  Matrix raw(dim, n);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (is_discrete) {
      Sequence seq;
      for (std::size_t c = 0; c + 1 < row.size(); ++c) seq.push_back(std::stoi(row[c]));
      raw.col(i) = encode_discrete(one_hot(seq, shape.alphabet), loaded.smoothing);
    } else {
      if (static_cast<Eigen::Index>(row.size()) != dim + 1) throw std::runtime_error("dataset width mismatch");
      for (Eigen::Index r = 0; r < dim; ++r) raw(r, i) = parse_double(row[static_cast<std::size_t>(r)]);
    }
    y(i) = parse_double(row.back());
  }
  loaded.dataset = OfflineDataset::from_raw_with_stats(raw, y, std::move(stats), is_discrete, shape);
  loaded.dataset.oracle_bounds = ScoreBounds{meta.at("oracle_min").get<double>(),
                                             meta.at("oracle_max").get<double>()};
  return loaded;
}

void write_candidates(std::ostream& out, const CandidateSet& candidates, const OfflineDataset& dataset,
                      const std::string& method, int trial, bool header) {
  const Matrix raw = dataset.stats.denormalize_designs(candidates.designs);
  if (header) {
    if (!method.empty()) out << "method,";
    if (trial >= 0) out << "trial,";
    for (Eigen::Index r = 0; r < raw.rows(); ++r) out << 'x' << r << ',';
    out << "provenance,prediction\n";
  }
  for (Eigen::Index i = 0; i < raw.cols(); ++i) {
    if (!method.empty()) out << method << ',';
    if (trial >= 0) out << trial << ',';
    for (Eigen::Index r = 0; r < raw.rows(); ++r) out << format_double(raw(r, i)) << ',';
    out << candidates.provenance[static_cast<std::size_t>(i)] << ',';
    out << (candidates.predictions.size() == candidates.size() ? format_double(candidates.predictions(i))
                                                                : std::string("nan"))
        << '\n';
  }
}

void write_candidates(const std::filesystem::path& path, const CandidateSet& candidates,
                      const OfflineDataset& dataset, const std::string& method) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  write_candidates(out, candidates, dataset, method);
}

CandidateSet read_candidates(const std::filesystem::path& path, const OfflineDataset& dataset) {
  std::vector<std::string> header;
  const auto rows = read_csv_body(path, header);
  std::size_t first = 0;
  while (first < header.size() && (header[first] == "method" || header[first] == "trial")) ++first;
  const Eigen::Index dim = dataset.dim();
  if (header.size() != first + static_cast<std::size_t>(dim) + 2) {
    throw std::runtime_error(fmt::format("{}: expected {} design columns", path.string(), dim));
  }
  Matrix raw(dim, static_cast<Eigen::Index>(rows.size()));
  CandidateSet out;
  out.predictions.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    for (Eigen::Index r = 0; r < dim; ++r) raw(r, col) = parse_double(rows[i][first + static_cast<std::size_t>(r)]);
    out.provenance.push_back(std::stoll(rows[i][first + static_cast<std::size_t>(dim)]));
    out.predictions(col) = parse_double(rows[i][first + static_cast<std::size_t>(dim) + 1]);
  }
  out.designs = dataset.stats.normalize_designs(raw);
  return out;
}

void write_training_log(std::ostream& out, const std::vector<EpochLog>& log, const std::string& method,
                        int trial, bool header) {
  if (header) {
    if (!method.empty()) out << "method,";
    if (trial >= 0) out << "trial,";
    out << "epoch,mse,gap,alpha,mean_pred_data,mean_pred_mined\n";
  }
  for (const EpochLog& row : log) {
    if (!method.empty()) out << method << ',';
    if (trial >= 0) out << trial << ',';
    out << row.epoch << ',' << format_double(row.mse) << ',' << format_double(row.gap) << ','
        << format_double(row.alpha) << ',' << format_double(row.mean_pred_data) << ','
        << format_double(row.mean_pred_mined) << '\n';
  }
}

void write_curve(std::ostream& out, const StabilityCurve& curve) {
  out << "step,true_score,surrogate_value\n";
  for (std::size_t t = 0; t < curve.size(); ++t) {
    out << t << ',' << format_double(curve.true_scores[t]) << ','
        << format_double(curve.surrogate_values[t]) << '\n';
  }
}

void write_budget_sweep(std::ostream& out, const std::vector<BudgetScore>& sweep) {
  out << "budget,p100,p50,normalized_p100,normalized_p50\n";
  for (const BudgetScore& s : sweep) {
    out << s.budget << ',' << format_double(s.p100) << ',' << format_double(s.p50) << ','
        << format_double(s.normalized_p100) << ',' << format_double(s.normalized_p50) << '\n';
  }
}

void save_model(const std::filesystem::path& path, const ObjectiveModel& model) {
  json j;
  j["leak"] = model.leak();
  j["layers"] = json::array();
  for (const DenseLayer& layer : model.layers()) {
    json l;
    l["fan_in"] = layer.fan_in();
    l["fan_out"] = layer.fan_out();
    // Row-major weights.
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weights.size()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) w.push_back(layer.weights(r, c));
    }
    l["weights"] = std::move(w);
    l["bias"] = to_json(layer.bias);
    j["layers"].push_back(std::move(l));
  }
  write_text(path, j.dump() + "\n");
}

ObjectiveModel load_model(const std::filesystem::path& path) {
  const json j = json::parse(read_text(path));
  std::vector<DenseLayer> layers;
  for (const json& l : j.at("layers")) {
    const auto fan_in = l.at("fan_in").get<Eigen::Index>();
    const auto fan_out = l.at("fan_out").get<Eigen::Index>();
    const auto w = l.at("weights").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != fan_in * fan_out) {
      throw std::runtime_error("model file: weight count does not match fan_in * fan_out");
    }
    DenseLayer layer{Matrix(fan_out, fan_in), vector_from_json(l.at("bias"))};
    for (Eigen::Index r = 0; r < fan_out; ++r) {
      for (Eigen::Index c = 0; c < fan_in; ++c) layer.weights(r, c) = w[static_cast<std::size_t>(r * fan_in + c)];
    }
    layers.push_back(std::move(layer));
  }
  return ObjectiveModel(std::move(layers), j.at("leak").get<double>());
}

}  // namespace coms::io
