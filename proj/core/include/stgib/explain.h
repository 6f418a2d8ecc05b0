#ifndef STGIB_EXPLAIN_H_
#define STGIB_EXPLAIN_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "stgib/model.h"
#include "stgib/serialize.h"

namespace stgib {

enum class GraphKind { kSpatial, kTemporal };

std::string_view GraphKindName(GraphKind kind);

struct Explanation {
  GraphKind kind = GraphKind::kSpatial;
  std::vector<Edge> all_edges;     // M
  std::vector<bool> kept;          // m, aligned with all_edges
  std::vector<double> edge_probs;  // aligned with all_edges; may be empty

  int num_edges() const { return static_cast<int>(all_edges.size()); }
  int num_kept() const;
  std::vector<Edge> kept_edges() const;
  // Flags for M \ m.
  std::vector<bool> complement() const;
};

// Exactly one of threshold / top_fraction must be set. Threshold mode keeps
// p >= threshold; top-fraction mode keeps the ceil(fraction * |M|) most
// probable edges, ties going to the lexicographically smaller (v, u).
Explanation ExtractExplanation(GraphKind kind, const std::vector<Edge>& edges, const std::vector<double>& probs,
                               std::optional<double> threshold, std::optional<double> top_fraction);

enum class SparsityCount { kEdges, kNodes };

// Mean of 1 - |m_i| / |M_i|. Node counting uses the nodes incident to the
// kept / all edges. Graphs with |M_i| = 0 contribute 0.
double SparsityPlus(const std::vector<Explanation>& explanations, SparsityCount count = SparsityCount::kEdges);

// Mean absolute difference (raw units, over all L'*N*F' entries) between
// the full-graph prediction and the prediction on the complement M \ m.
// Both runs use eval mode with hard structure: kept edges at unit weight.
double FidelityTerm(Model& model, const STWindow& window, const Explanation& explanation);

// Mean of FidelityTerm over aligned (window, explanation) pairs.
double FidelityPlus(Model& model, const std::vector<STWindow>& windows, const std::vector<Explanation>& explanations);

// Uniform sample of `size` edges without replacement.
Explanation RandomExplanation(GraphKind kind, const std::vector<Edge>& edges, int size, uint64_t seed);

struct AucResult {
  double auc = 0.5;
  bool degenerate = false;  // all labels identical
};

// ROC AUC of planted edges (positives) against the rest, by rank sums with
// averaged ranks for ties.
AucResult EdgeRecoveryAuc(const std::vector<Edge>& edges, const std::vector<double>& probs,
                          const std::vector<Edge>& planted);

struct ExplainOptions {
  std::optional<double> threshold;
  std::optional<double> top_fraction;
  SparsityCount count = SparsityCount::kEdges;
  uint64_t baseline_seed = 0;
  std::vector<Edge> planted_edges;  // enables the spatial AUC when non-empty
};

struct ExplainRow {
  GraphKind kind = GraphKind::kSpatial;
  double sparsity = 0.0;
  double fidelity = 0.0;
  double baseline_fidelity = 0.0;
  std::optional<double> auc;
  bool auc_degenerate = false;
};

struct ExplainReport {
  std::vector<ExplainRow> rows;  // spatial, temporal
  std::vector<double> mean_spatial_probs;
  std::vector<double> mean_temporal_probs;
  int num_windows = 0;
};

// Per window: eval-mode distillation, extraction for both graph kinds, a
// random same-size baseline, and the fidelity of each.
ExplainReport RunExplain(Model& model, const std::vector<STWindow>& windows, const ExplainOptions& options);

// CSV columns: graph_kind,sparsity,fidelity,baseline_fidelity,auc.
void WriteExplainCsv(std::ostream& os, const ExplainReport& report);
Json ExplainSummary(const ExplainReport& report);

}  // namespace stgib

#endif  // STGIB_EXPLAIN_H_
