#ifndef STGIB_EXPERIMENT_H_
#define STGIB_EXPERIMENT_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stgib/data.h"
#include "stgib/model.h"
#include "stgib/serialize.h"
#include "stgib/trainer.h"

namespace stgib {

struct DataConfig {
  std::string values;       // array file, (T, N, F) or (D, rows, cols, C)
  std::string distances;    // traffic: from,to,cost CSV
  std::string planted_edges;  // synthetic: ground-truth edge list (optional)
  std::string graph;          // synthetic: candidate edge list; complete graph when empty
  std::optional<double> sigma;  // traffic kernel width; default std of costs
  double threshold = 0.1;       // traffic kernel cut-off
  int interval_minutes = 5;     // traffic sampling interval
  int grid_rows = 0;            // crime grid
  int grid_cols = 0;
  int period = 24;              // synthetic steps per cycle

  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct SplitConfig {
  double train_ratio = 0.6;
  double val_ratio = 0.2;
  int val_steps = 30;  // crime: last days of the training span

  friend bool operator==(const SplitConfig&, const SplitConfig&) = default;
};

struct ExperimentConfig {
  Task task = Task::kSynthetic;
  DataConfig data;
  int input_steps = 12;
  int output_steps = 12;
  SplitConfig split;
  ModelConfig model;
  TrainConfig train;
  std::string output_dir;
  double missing_rate = 0.0;  // feature corruption for robustness runs
  uint64_t missing_seed = 0;

  void Validate() const;
};

void to_json(Json& j, const DataConfig& c);
void from_json(const Json& j, DataConfig& c);
void to_json(Json& j, const SplitConfig& c);
void from_json(const Json& j, SplitConfig& c);
void to_json(Json& j, const ExperimentConfig& c);
// Unknown keys raise ConfigError; a model section without steps_per_day
// takes the value implied by the task (1440 / interval, 1, or period).
void from_json(const Json& j, ExperimentConfig& c);

ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);

struct PreparedData {
  SpatialGraph graph;
  Scaler scaler;
  SplitPlan plan;
  ModelDims dims;
  std::vector<STWindow> train, val, test;
  std::vector<Edge> planted_edges;
};

// Loads, splits, scales and windows the configured dataset. Paths relative
// to `base_dir` are resolved against it.
PreparedData PrepareData(const ExperimentConfig& config, const std::filesystem::path& base_dir = {});

// Same pipeline on an in-memory series (T, N, F) and graph.
PreparedData PrepareSeries(const ExperimentConfig& config, const Tensor3& series, SpatialGraph graph);

}  // namespace stgib

#endif  // STGIB_EXPERIMENT_H_
