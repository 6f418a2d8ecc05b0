#include "stgib/types.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stgib/errors.h"

namespace stgib {

Tensor3::Tensor3(int d0, int d1, int d2, Matrix m) : dim0(d0), dim1(d1), dim2(d2), data(std::move(m)) {
  if (data.rows() != static_cast<Eigen::Index>(d0) * d1 || data.cols() != d2) {
    std::ostringstream os;
    os << "Tensor3: storage " << data.rows() << "x" << data.cols() << " does not match (" << d0
       << ", " << d1 << ", " << d2 << ")";
    throw ShapeError(os.str());
  }
}

Graph::Graph(int num_nodes, std::vector<Edge> edges) : num_nodes_(num_nodes), edges_(std::move(edges)) {
  if (num_nodes_ < 1) throw ValueError("graph: num_nodes must be >= 1");
  std::vector<Edge> sorted = edges_;
  std::sort(sorted.begin(), sorted.end());
  for (size_t e = 0; e < sorted.size(); ++e) {
    const Edge& edge = sorted[e];
    if (edge.src < 0 || edge.src >= num_nodes_ || edge.dst < 0 || edge.dst >= num_nodes_) {
      throw ValueError("graph: edge endpoint out of range");
    }
    if (edge.src == edge.dst) throw ValueError("graph: self-loops are implicit and may not be listed");
    if (e > 0 && sorted[e - 1] == edge) throw ValueError("graph: duplicate edge");
  }

  in_offsets_.assign(num_nodes_ + 1, 0);
  for (const Edge& edge : edges_) ++in_offsets_[edge.dst + 1];
  for (int j = 0; j < num_nodes_; ++j) in_offsets_[j + 1] += in_offsets_[j];
  in_sources_.resize(edges_.size());
  in_edge_ids_.resize(edges_.size());
  std::vector<int> cursor(in_offsets_.begin(), in_offsets_.end() - 1);
  for (int e = 0; e < num_edges(); ++e) {
    const int slot = cursor[edges_[e].dst]++;
    in_sources_[slot] = edges_[e].src;
    in_edge_ids_[slot] = e;
  }
}

std::optional<int> Graph::FindEdge(Edge e) const {
  if (e.dst < 0 || e.dst >= num_nodes_) return std::nullopt;
  for (int s = in_offsets_[e.dst]; s < in_offsets_[e.dst + 1]; ++s) {
    if (in_sources_[s] == e.src) return in_edge_ids_[s];
  }
  return std::nullopt;
}

Graph Graph::Subgraph(const std::vector<bool>& keep) const {
  if (keep.size() != edges_.size()) throw ShapeError("Subgraph: mask length differs from edge count");
  std::vector<Edge> kept;
  for (size_t e = 0; e < edges_.size(); ++e) {
    if (keep[e]) kept.push_back(edges_[e]);
  }
  return Graph(num_nodes_, std::move(kept));
}

SpatialGraph::SpatialGraph(int num_nodes, std::vector<Edge> edges) : arcs_(num_nodes, std::move(edges)) {}

Eigen::MatrixXi SpatialGraph::adjacency() const {
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(num_nodes(), num_nodes());
  for (const Edge& e : arcs_.edges()) a(e.src, e.dst) = 1;
  return a;
}

TemporalGraph::TemporalGraph(int num_steps) {
  if (num_steps < 1) throw ValueError("temporal graph: num_steps must be >= 1");
  std::vector<Edge> edges;
  edges.reserve(static_cast<size_t>(num_steps) * (num_steps - 1));
  for (int v = 0; v < num_steps; ++v) {
    for (int u = 0; u < num_steps; ++u) {
      if (u != v) edges.push_back({v, u});
    }
  }
  arcs_ = Graph(num_steps, std::move(edges));
}

Eigen::MatrixXi TemporalGraph::adjacency() const {
  return Eigen::MatrixXi::Ones(num_steps(), num_steps());
}

std::string_view TaskName(Task task) {
  switch (task) {
    case Task::kTraffic:
      return "traffic";
    case Task::kCrime:
      return "crime";
    case Task::kSynthetic:
      return "synthetic";
  }
  return "synthetic";
}

Task ParseTask(std::string_view name) {
  if (name == "traffic") return Task::kTraffic;
  if (name == "crime") return Task::kCrime;
  if (name == "synthetic") return Task::kSynthetic;
  throw ValueError("unknown task '" + std::string(name) + "'");
}

void ModelConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValueError(std::string("model config: ") + what);
  };
  require(embed_dim >= 1 && spatial_dim >= 1 && temporal_dim >= 1, "dimensions must be >= 1");
  require(heads >= 1, "heads must be >= 1");
  require(gat_layers >= 1, "gat_layers must be >= 1");
  require(tau > 0.0, "tau must be > 0");
  require(delta > 0.0, "delta must be > 0");
  require(lambda1 >= 0.0 && lambda2 >= 0.0, "lambda1/lambda2 must be >= 0");
  require(steps_per_day >= 1, "steps_per_day must be >= 1");
  require(head_hidden >= 1, "head_hidden must be >= 1");
  for (const PriorSchedule* s : {&spatial_prior, &temporal_prior}) {
    require(s->r_floor > 0.0 && s->r_start < 1.0 && s->r_floor <= s->r_start,
            "prior schedule needs 0 < r_floor <= r_start < 1");
    require(s->decay_amount >= 0.0 && s->decay_interval_epochs >= 1, "prior decay settings invalid");
  }
  if (ablation.random_drop_p) {
    require(*ablation.random_drop_p >= 0.0 && *ablation.random_drop_p <= 1.0,
            "random_drop_p must be in [0, 1]");
  }
}

void ValidateWindow(const STWindow& w, const SpatialGraph& g, int steps_per_day) {
  const Tensor3& x = w.features;
  const Tensor3& y = w.targets;
  if (x.dim0 < 1) throw ShapeError("window.features: L must be >= 1");
  if (y.dim0 < 1) throw ShapeError("window.targets: L' must be >= 1");
  if (x.dim1 != g.num_nodes()) {
    throw ShapeError("window.features: node axis " + std::to_string(x.dim1) + " != graph N " +
                     std::to_string(g.num_nodes()));
  }
  if (y.dim1 != g.num_nodes()) throw ShapeError("window.targets: node axis differs from graph N");
  if (x.data.rows() != static_cast<Eigen::Index>(x.dim0) * x.dim1 || x.data.cols() != x.dim2) {
    throw ShapeError("window.features: storage does not match dims");
  }
  if (y.data.rows() != static_cast<Eigen::Index>(y.dim0) * y.dim1 || y.data.cols() != y.dim2) {
    throw ShapeError("window.targets: storage does not match dims");
  }
  if (!x.AllFinite()) throw ValueError("window.features: non-finite entry");
  if (!y.AllFinite()) throw ValueError("window.targets: non-finite entry");
  const size_t steps = static_cast<size_t>(x.dim0);
  if (w.tod_index.size() != steps) throw ShapeError("window.tod_index: length != L");
  if (w.dow_index.size() != steps) throw ShapeError("window.dow_index: length != L");
  for (size_t i = 0; i < steps; ++i) {
    if (w.tod_index[i] < 0 || w.tod_index[i] >= steps_per_day) {
      throw ValueError("window.tod_index: entry out of [0, steps_per_day)");
    }
    if (w.dow_index[i] < 0 || w.dow_index[i] >= 7) throw ValueError("window.dow_index: entry out of [0, 7)");
    if (i == 0) continue;
    const int next_tod = (w.tod_index[i - 1] + 1) % steps_per_day;
    const int next_dow = next_tod == 0 ? (w.dow_index[i - 1] + 1) % 7 : w.dow_index[i - 1];
    if (w.tod_index[i] != next_tod) throw ValueError("window.tod_index: not consecutive");
    if (w.dow_index[i] != next_dow) throw ValueError("window.dow_index: not consecutive");
  }
}

}  // namespace stgib
