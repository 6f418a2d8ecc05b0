#include "stgib/serialize.h"

#include <algorithm>

#include "stgib/errors.h"

namespace stgib {
namespace {

Json MatrixToJson(const Matrix& m) {
  return Json(std::vector<double>(m.data(), m.data() + m.size()));
}

template <typename T>
void ReadIfPresent(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

void RejectUnknownKeys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

void to_json(Json& j, const Tensor3& t) {
  j = Json{{"shape", {t.dim0, t.dim1, t.dim2}}, {"data", MatrixToJson(t.data)}};
}

void from_json(const Json& j, Tensor3& t) {
  const auto shape = j.at("shape").get<std::vector<int>>();
  if (shape.size() != 3) throw ShapeError("Tensor3: shape must have 3 entries");
  const auto flat = j.at("data").get<std::vector<double>>();
  const size_t expected = static_cast<size_t>(shape[0]) * shape[1] * shape[2];
  if (flat.size() != expected) throw ShapeError("Tensor3: data length does not match shape");
  Matrix m(static_cast<Eigen::Index>(shape[0]) * shape[1], shape[2]);
  std::copy(flat.begin(), flat.end(), m.data());
  t = Tensor3(shape[0], shape[1], shape[2], std::move(m));
}

void to_json(Json& j, const Edge& e) { j = Json::array({e.src, e.dst}); }

void from_json(const Json& j, Edge& e) {
  e.src = j.at(0).get<int>();
  e.dst = j.at(1).get<int>();
}

void to_json(Json& j, const SpatialGraph& g) {
  j = Json{{"num_nodes", g.num_nodes()}, {"edges", g.edges()}};
}

void from_json(const Json& j, SpatialGraph& g) {
  g = SpatialGraph(j.at("num_nodes").get<int>(), j.at("edges").get<std::vector<Edge>>());
}

void to_json(Json& j, const TemporalGraph& g) { j = Json{{"num_steps", g.num_steps()}}; }

void from_json(const Json& j, TemporalGraph& g) { g = TemporalGraph(j.at("num_steps").get<int>()); }

void to_json(Json& j, const STWindow& w) {
  j = Json{{"features", w.features},
           {"targets", w.targets},
           {"tod_index", w.tod_index},
           {"dow_index", w.dow_index}};
}

void from_json(const Json& j, STWindow& w) {
  w.features = j.at("features").get<Tensor3>();
  w.targets = j.at("targets").get<Tensor3>();
  w.tod_index = j.at("tod_index").get<std::vector<int>>();
  w.dow_index = j.at("dow_index").get<std::vector<int>>();
}

void to_json(Json& j, const Scaler& s) { j = Json{{"mean", s.mean}, {"std", s.std}}; }

void from_json(const Json& j, Scaler& s) {
  s.mean = j.at("mean").get<double>();
  s.std = j.at("std").get<double>();
  if (!(s.std > 0.0)) throw ValueError("scaler.std must be > 0");
}

void to_json(Json& j, const STGraphDataset& d) {
  j = Json{{"task", TaskName(d.task)},
           {"scaler", d.scaler},
           {"spatial_graph", d.spatial_graph},
           {"windows", d.windows}};
}

void from_json(const Json& j, STGraphDataset& d) {
  d.task = ParseTask(j.at("task").get<std::string>());
  d.scaler = j.at("scaler").get<Scaler>();
  d.spatial_graph = j.at("spatial_graph").get<SpatialGraph>();
  d.windows = j.at("windows").get<std::vector<STWindow>>();
}

void to_json(Json& j, const PriorSchedule& s) {
  j = Json{{"r_start", s.r_start},
           {"decay_amount", s.decay_amount},
           {"decay_interval_epochs", s.decay_interval_epochs},
           {"r_floor", s.r_floor}};
}

void from_json(const Json& j, PriorSchedule& s) {
  RejectUnknownKeys(j, {"r_start", "decay_amount", "decay_interval_epochs", "r_floor"}, "prior");
  ReadIfPresent(j, "r_start", s.r_start);
  ReadIfPresent(j, "decay_amount", s.decay_amount);
  ReadIfPresent(j, "decay_interval_epochs", s.decay_interval_epochs);
  ReadIfPresent(j, "r_floor", s.r_floor);
}

void to_json(Json& j, const Ablation& a) {
  j = Json{{"no_spatial_ib", a.no_spatial_ib}, {"no_temporal_ib", a.no_temporal_ib}};
  j["random_drop_p"] = a.random_drop_p ? Json(*a.random_drop_p) : Json(nullptr);
}

void from_json(const Json& j, Ablation& a) {
  RejectUnknownKeys(j, {"no_spatial_ib", "no_temporal_ib", "random_drop_p"}, "ablation");
  ReadIfPresent(j, "no_spatial_ib", a.no_spatial_ib);
  ReadIfPresent(j, "no_temporal_ib", a.no_temporal_ib);
  if (auto it = j.find("random_drop_p"); it != j.end()) {
    a.random_drop_p = it->is_null() ? std::nullopt : std::optional<double>(it->get<double>());
  }
}

void to_json(Json& j, const ModelConfig& c) {
  j = Json{{"embed_dim", c.embed_dim},
           {"spatial_dim", c.spatial_dim},
           {"temporal_dim", c.temporal_dim},
           {"heads", c.heads},
           {"gat_layers", c.gat_layers},
           {"tau", c.tau},
           {"spatial_prior", c.spatial_prior},
           {"temporal_prior", c.temporal_prior},
           {"lambda1", c.lambda1},
           {"lambda2", c.lambda2},
           {"delta", c.delta},
           {"steps_per_day", c.steps_per_day},
           {"ablation", c.ablation},
           {"head_hidden", c.head_hidden},
           {"feature_lift_dim", c.feature_lift_dim},
           {"noise", c.noise == NoiseKind::kGumbel ? "gumbel" : "logistic"}};
}

void from_json(const Json& j, ModelConfig& c) {
  RejectUnknownKeys(j,
                    {"embed_dim", "spatial_dim", "temporal_dim", "heads", "gat_layers", "tau", "spatial_prior",
                     "temporal_prior", "lambda1", "lambda2", "delta", "steps_per_day", "ablation", "head_hidden",
                     "feature_lift_dim", "noise"},
                    "model");
  ReadIfPresent(j, "embed_dim", c.embed_dim);
  ReadIfPresent(j, "spatial_dim", c.spatial_dim);
  ReadIfPresent(j, "temporal_dim", c.temporal_dim);
  ReadIfPresent(j, "heads", c.heads);
  ReadIfPresent(j, "gat_layers", c.gat_layers);
  ReadIfPresent(j, "tau", c.tau);
  if (j.contains("spatial_prior")) from_json(j.at("spatial_prior"), c.spatial_prior);
  if (j.contains("temporal_prior")) from_json(j.at("temporal_prior"), c.temporal_prior);
  ReadIfPresent(j, "lambda1", c.lambda1);
  ReadIfPresent(j, "lambda2", c.lambda2);
  ReadIfPresent(j, "delta", c.delta);
  ReadIfPresent(j, "steps_per_day", c.steps_per_day);
  if (j.contains("ablation")) from_json(j.at("ablation"), c.ablation);
  ReadIfPresent(j, "head_hidden", c.head_hidden);
  ReadIfPresent(j, "feature_lift_dim", c.feature_lift_dim);
  if (auto it = j.find("noise"); it != j.end()) {
    const auto name = it->get<std::string>();
    if (name == "gumbel") {
      c.noise = NoiseKind::kGumbel;
    } else if (name == "logistic") {
      c.noise = NoiseKind::kLogistic;
    } else {
      throw ConfigError("model.noise: expected 'gumbel' or 'logistic'");
    }
  }
}

void to_json(Json& j, const DistillResult& r) {
  j = Json{{"spatial_probs", r.spatial_probs},         {"temporal_probs", r.temporal_probs},
           {"spatial_selector", r.spatial_selector},   {"temporal_selector", r.temporal_selector},
           {"kl_spatial", r.kl_spatial},               {"kl_temporal", r.kl_temporal}};
}

void from_json(const Json& j, DistillResult& r) {
  r.spatial_probs = j.at("spatial_probs").get<std::vector<double>>();
  r.temporal_probs = j.at("temporal_probs").get<std::vector<double>>();
  r.spatial_selector = j.at("spatial_selector").get<std::vector<double>>();
  r.temporal_selector = j.at("temporal_selector").get<std::vector<double>>();
  r.kl_spatial = j.at("kl_spatial").get<double>();
  r.kl_temporal = j.at("kl_temporal").get<double>();
}

}  // namespace stgib
