#ifndef STGIB_TYPES_H_
#define STGIB_TYPES_H_

#include <Eigen/Core>

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stgib {

// Row-major so that a (A, B, C) tensor stored as an (A*B) x C matrix can be
// reinterpreted as A x (B*C) without copying.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense rank-3 array stored as a (dim0*dim1) x dim2 matrix.
struct Tensor3 {
  int dim0 = 0;
  int dim1 = 0;
  int dim2 = 0;
  Matrix data;

  Tensor3() = default;
  Tensor3(int d0, int d1, int d2) : dim0(d0), dim1(d1), dim2(d2), data(Matrix::Zero(d0 * d1, d2)) {}
  Tensor3(int d0, int d1, int d2, Matrix m);

  double& operator()(int i, int j, int k) { return data(i * dim1 + j, k); }
  double operator()(int i, int j, int k) const { return data(i * dim1 + j, k); }
  bool AllFinite() const { return data.allFinite(); }

  friend bool operator==(const Tensor3& a, const Tensor3& b) {
    return a.dim0 == b.dim0 && a.dim1 == b.dim1 && a.dim2 == b.dim2 && a.data == b.data;
  }
};

// Directed arc src -> dst: messages from src are aggregated at dst.
struct Edge {
  int src = 0;
  int dst = 0;
  auto operator<=>(const Edge&) const = default;
};

// Directed arc set without self-loops, with a CSR index of in-neighbors per
// destination node. Self-loops are implicit in attention aggregation.
class Graph {
 public:
  Graph() = default;
  Graph(int num_nodes, std::vector<Edge> edges);

  int num_nodes() const { return num_nodes_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }

  // In-neighbors of node j occupy [in_offsets()[j], in_offsets()[j + 1]) of
  // in_sources() / in_edge_ids().
  const std::vector<int>& in_offsets() const { return in_offsets_; }
  const std::vector<int>& in_sources() const { return in_sources_; }
  const std::vector<int>& in_edge_ids() const { return in_edge_ids_; }

  std::optional<int> FindEdge(Edge e) const;
  bool HasEdge(Edge e) const { return FindEdge(e).has_value(); }

  // Keeps edges whose flag is set; edge order is preserved.
  Graph Subgraph(const std::vector<bool>& keep) const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.num_nodes_ == b.num_nodes_ && a.edges_ == b.edges_;
  }

 private:
  int num_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> in_offsets_;
  std::vector<int> in_sources_;
  std::vector<int> in_edge_ids_;
};

class SpatialGraph {
 public:
  SpatialGraph() = default;
  SpatialGraph(int num_nodes, std::vector<Edge> edges);

  int num_nodes() const { return arcs_.num_nodes(); }
  const Graph& arcs() const { return arcs_; }
  const std::vector<Edge>& edges() const { return arcs_.edges(); }
  // Binary N x N matrix; entry (v, u) is 1 iff arc v -> u is present.
  Eigen::MatrixXi adjacency() const;

  friend bool operator==(const SpatialGraph&, const SpatialGraph&) = default;

 private:
  Graph arcs_;
};

// Fully connected over the input horizon. The adjacency is all-ones; arcs()
// lists the T*(T-1) off-diagonal arcs, the diagonal being the implicit self-loop.
class TemporalGraph {
 public:
  TemporalGraph() = default;
  explicit TemporalGraph(int num_steps);

  int num_steps() const { return arcs_.num_nodes(); }
  const Graph& arcs() const { return arcs_; }
  Eigen::MatrixXi adjacency() const;

  friend bool operator==(const TemporalGraph&, const TemporalGraph&) = default;

 private:
  Graph arcs_;
};

struct STWindow {
  Tensor3 features;  // (L, N, F), normalized units
  Tensor3 targets;   // (L', N, F'), raw units
  std::vector<int> tod_index;
  std::vector<int> dow_index;

  int input_steps() const { return features.dim0; }
  int num_nodes() const { return features.dim1; }

  friend bool operator==(const STWindow&, const STWindow&) = default;
};

struct Scaler {
  double mean = 0.0;
  double std = 1.0;

  double Transform(double x) const { return (x - mean) / std; }
  double Inverse(double z) const { return z * std + mean; }
  friend bool operator==(const Scaler&, const Scaler&) = default;
};

enum class Task { kTraffic, kCrime, kSynthetic };

std::string_view TaskName(Task task);
Task ParseTask(std::string_view name);

struct STGraphDataset {
  std::vector<STWindow> windows;
  SpatialGraph spatial_graph;
  Scaler scaler;
  Task task = Task::kSynthetic;

  friend bool operator==(const STGraphDataset&, const STGraphDataset&) = default;
};

// Keep-probability prior r(epoch) = max(floor, start - decay * (epoch / interval)).
struct PriorSchedule {
  double r_start = 0.9;
  double decay_amount = 0.1;
  int decay_interval_epochs = 10;
  double r_floor = 0.3;

  friend bool operator==(const PriorSchedule&, const PriorSchedule&) = default;
};

struct Ablation {
  bool no_spatial_ib = false;
  bool no_temporal_ib = false;
  std::optional<double> random_drop_p;

  friend bool operator==(const Ablation&, const Ablation&) = default;
};

enum class NoiseKind { kGumbel, kLogistic };

struct ModelConfig {
  int embed_dim = 64;      // d
  int spatial_dim = 64;    // d_s
  int temporal_dim = 128;  // d_t
  int heads = 16;          // K
  int gat_layers = 2;
  double tau = 1.0;
  PriorSchedule spatial_prior;
  PriorSchedule temporal_prior;
  // Upper values reached by the annealed loss weights.
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double delta = 1.0;
  int steps_per_day = 288;
  Ablation ablation;
  int head_hidden = 512;       // hidden width of the regression MLP
  int feature_lift_dim = 0;    // d_x; 0 means embed_dim
  NoiseKind noise = NoiseKind::kGumbel;

  int lift_dim() const { return feature_lift_dim > 0 ? feature_lift_dim : embed_dim; }
  void Validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Per-edge quantities are aligned with the corresponding graph's edges().
struct DistillResult {
  std::vector<double> spatial_probs;
  std::vector<double> temporal_probs;
  std::vector<double> spatial_selector;
  std::vector<double> temporal_selector;
  double kl_spatial = 0.0;
  double kl_temporal = 0.0;

  friend bool operator==(const DistillResult&, const DistillResult&) = default;
};

// Throws ShapeError / ValueError naming the offending field.
void ValidateWindow(const STWindow& w, const SpatialGraph& g, int steps_per_day);

}  // namespace stgib

#endif  // STGIB_TYPES_H_
