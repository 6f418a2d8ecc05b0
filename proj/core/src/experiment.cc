#include "stgib/experiment.h"

#include <algorithm>
#include <fstream>

#include "stgib/errors.h"

namespace stgib {

namespace {

template <typename T>
void GetIf(const Json& j, const char* key, T& field) {
  if (j.contains(key)) j.at(key).get_to(field);
}

int DerivedStepsPerDay(const ExperimentConfig& c) {
  switch (c.task) {
    case Task::kTraffic:
      return 1440 / c.data.interval_minutes;
    case Task::kCrime:
      return 1;
    case Task::kSynthetic:
      return c.data.period;
  }
  return 1;
}

std::filesystem::path Resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

void to_json(Json& j, const DataConfig& c) {
  j = Json{{"values", c.values},
           {"distances", c.distances},
           {"planted_edges", c.planted_edges},
           {"graph", c.graph},
           {"threshold", c.threshold},
           {"interval_minutes", c.interval_minutes},
           {"grid_rows", c.grid_rows},
           {"grid_cols", c.grid_cols},
           {"period", c.period}};
  j["sigma"] = c.sigma ? Json(*c.sigma) : Json(nullptr);
}

void from_json(const Json& j, DataConfig& c) {
  RejectUnknownKeys(j,
                    {"values", "distances", "planted_edges", "graph", "sigma", "threshold", "interval_minutes", "grid_rows",
                     "grid_cols", "period"},
                    "data");
  GetIf(j, "values", c.values);
  GetIf(j, "distances", c.distances);
  GetIf(j, "planted_edges", c.planted_edges);
  GetIf(j, "graph", c.graph);
  if (j.contains("sigma") && !j.at("sigma").is_null()) c.sigma = j.at("sigma").get<double>();
  GetIf(j, "threshold", c.threshold);
  GetIf(j, "interval_minutes", c.interval_minutes);
  GetIf(j, "grid_rows", c.grid_rows);
  GetIf(j, "grid_cols", c.grid_cols);
  GetIf(j, "period", c.period);
}

void to_json(Json& j, const SplitConfig& c) {
  j = Json{{"train_ratio", c.train_ratio}, {"val_ratio", c.val_ratio}, {"val_steps", c.val_steps}};
}

void from_json(const Json& j, SplitConfig& c) {
  RejectUnknownKeys(j, {"train_ratio", "val_ratio", "val_steps"}, "split");
  GetIf(j, "train_ratio", c.train_ratio);
  GetIf(j, "val_ratio", c.val_ratio);
  GetIf(j, "val_steps", c.val_steps);
}

void to_json(Json& j, const ExperimentConfig& c) {
  j = Json{{"task", TaskName(c.task)},
           {"data", c.data},
           {"input_steps", c.input_steps},
           {"output_steps", c.output_steps},
           {"split", c.split},
           {"model", c.model},
           {"train", c.train},
           {"output_dir", c.output_dir},
           {"missing_rate", c.missing_rate},
           {"missing_seed", c.missing_seed}};
}

void from_json(const Json& j, ExperimentConfig& c) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  RejectUnknownKeys(j,
                    {"task", "data", "input_steps", "output_steps", "split", "model", "train", "output_dir",
                     "missing_rate", "missing_seed"},
                    "experiment");
  try {
    if (j.contains("task")) c.task = ParseTask(j.at("task").get<std::string>());
  } catch (const ValueError& e) {
    throw ConfigError(e.what());
  }
  GetIf(j, "data", c.data);
  GetIf(j, "input_steps", c.input_steps);
  GetIf(j, "output_steps", c.output_steps);
  GetIf(j, "split", c.split);
  GetIf(j, "train", c.train);
  GetIf(j, "output_dir", c.output_dir);
  GetIf(j, "missing_rate", c.missing_rate);
  GetIf(j, "missing_seed", c.missing_seed);
  const bool explicit_spd = j.contains("model") && j.at("model").contains("steps_per_day");
  GetIf(j, "model", c.model);
  if (!explicit_spd) c.model.steps_per_day = DerivedStepsPerDay(c);
}

void ExperimentConfig::Validate() const {
  if (data.values.empty()) throw ConfigError("data.values: dataset path is required");
  if (task == Task::kTraffic && data.distances.empty()) throw ConfigError("data.distances: required for traffic");
  if (task == Task::kTraffic && (data.interval_minutes < 1 || 1440 % data.interval_minutes != 0)) {
    throw ConfigError("data.interval_minutes must divide a day");
  }
  if (task == Task::kCrime && (data.grid_rows < 1 || data.grid_cols < 1)) {
    throw ConfigError("data.grid_rows / data.grid_cols: required for crime");
  }
  if (data.period < 1) throw ConfigError("data.period must be >= 1");
  if (input_steps < 1 || output_steps < 1) throw ConfigError("input_steps and output_steps must be >= 1");
  if (!(split.train_ratio > 0.0 && split.val_ratio >= 0.0 && split.train_ratio + split.val_ratio < 1.0)) {
    throw ConfigError("split ratios must satisfy train > 0, val >= 0, train + val < 1");
  }
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw ConfigError("missing_rate must be in [0, 1)");
  try {
    model.Validate();
  } catch (const ValueError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  train.Validate();
}

ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  ExperimentConfig c;
  try {
    c = j.get<ExperimentConfig>();
  } catch (const Json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return c;
}

PreparedData PrepareSeries(const ExperimentConfig& config, const Tensor3& series, SpatialGraph graph) {
  const int L = config.input_steps, Lo = config.output_steps;
  if (series.dim1 != graph.num_nodes()) throw ShapeError("dataset: series node axis differs from the graph");
  PreparedData out;
  out.graph = std::move(graph);
  out.dims = {L, Lo, series.dim1, series.dim2, series.dim2};
  const int T = series.dim0;
  out.plan = config.task == Task::kCrime ? SplitCrime(T, config.split.val_steps, L, Lo)
                                         : SplitByRatios(T, config.split.train_ratio, config.split.val_ratio, L + Lo);

  const Tensor3 observed =
      config.missing_rate > 0.0 ? CorruptMissing(series, config.missing_rate, config.missing_seed) : series;
  out.scaler = FitScaler(SliceSteps(observed, out.plan.train.begin, out.plan.train.length));

  auto make = [&](const SplitRange& r, int context) {
    const int begin = r.begin - std::min(context, r.begin);
    const int lead = r.begin - begin;
    const Tensor3 x = SliceSteps(observed, begin, lead + r.length);
    const Tensor3 y = SliceSteps(series, begin, lead + r.length);
    WindowSpec spec{L, Lo, config.model.steps_per_day, begin};
    return WindowDatasetWithContext(x, lead, spec, out.scaler, &y);
  };
  out.train = make(out.plan.train, 0);
  out.val = out.plan.val.length > 0 ? make(out.plan.val, out.plan.history_context) : std::vector<STWindow>{};
  out.test = make(out.plan.test, out.plan.history_context);
  return out;
}

PreparedData PrepareData(const ExperimentConfig& config, const std::filesystem::path& base_dir) {
  config.Validate();
  const NdArray raw = ReadArray(Resolve(base_dir, config.data.values));
  const Tensor3 series = ArrayToSeries(raw);
  SpatialGraph graph;
  std::vector<Edge> planted;
  switch (config.task) {
    case Task::kTraffic: {
      const auto distances = ReadDistances(Resolve(base_dir, config.data.distances));
      const double sigma = config.data.sigma ? *config.data.sigma : DefaultGaussianSigma(distances);
      graph = BuildSpatialGraphGaussian(distances, sigma, config.data.threshold, series.dim1);
      break;
    }
    case Task::kCrime:
      if (config.data.grid_rows * config.data.grid_cols != series.dim1) {
        throw ConfigError("data.grid_rows * data.grid_cols must equal the number of regions in the values file");
      }
      graph = BuildSpatialGraphGrid(config.data.grid_rows, config.data.grid_cols);
      break;
    case Task::kSynthetic:
      if (config.data.graph.empty()) {
        graph = BuildCompleteGraph(series.dim1);
      } else {
        int n = 0;
        std::vector<Edge> edges = ReadEdgeList(Resolve(base_dir, config.data.graph), &n);
        if (n != series.dim1) throw ConfigError("data.graph: node count differs from the values file");
        graph = SpatialGraph(n, std::move(edges));
      }
      if (!config.data.planted_edges.empty()) {
        int n = 0;
        planted = ReadEdgeList(Resolve(base_dir, config.data.planted_edges), &n);
        if (n != series.dim1) throw ConfigError("data.planted_edges: node count differs from the values file");
      }
      break;
  }
  PreparedData out = PrepareSeries(config, series, std::move(graph));
  out.planted_edges = std::move(planted);
  return out;
}

}  // namespace stgib
