#include "stgib/explain.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "stgib/errors.h"

namespace stgib {

std::string_view GraphKindName(GraphKind kind) { return kind == GraphKind::kSpatial ? "spatial" : "temporal"; }

int Explanation::num_kept() const { return static_cast<int>(std::count(kept.begin(), kept.end(), true)); }

std::vector<Edge> Explanation::kept_edges() const {
  std::vector<Edge> out;
  for (size_t e = 0; e < all_edges.size(); ++e) {
    if (kept[e]) out.push_back(all_edges[e]);
  }
  return out;
}

std::vector<bool> Explanation::complement() const {
  std::vector<bool> c(kept.size());
  for (size_t e = 0; e < kept.size(); ++e) c[e] = !kept[e];
  return c;
}

Explanation ExtractExplanation(GraphKind kind, const std::vector<Edge>& edges, const std::vector<double>& probs,
                               std::optional<double> threshold, std::optional<double> top_fraction) {
  if (threshold.has_value() == top_fraction.has_value()) {
    throw ValueError("extract_explanation: give exactly one of threshold and top_fraction");
  }
  if (edges.size() != probs.size()) throw ShapeError("extract_explanation: probabilities do not match edges");
  Explanation ex{kind, edges, std::vector<bool>(edges.size(), false), probs};
  if (threshold) {
    for (size_t e = 0; e < edges.size(); ++e) ex.kept[e] = probs[e] >= *threshold;
    return ex;
  }
  const double f = *top_fraction;
  if (!(f > 0.0 && f <= 1.0)) throw ValueError("extract_explanation: top_fraction must be in (0, 1]");
  // Guard against 0.3 * 10 evaluating to 3.0000000000000004.
  const size_t k = std::min(edges.size(), static_cast<size_t>(std::ceil(f * edges.size() - 1e-9)));
  std::vector<size_t> idx(edges.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return edges[a] < edges[b];
  });
  for (size_t i = 0; i < k; ++i) ex.kept[idx[i]] = true;
  return ex;
}

double SparsityPlus(const std::vector<Explanation>& explanations, SparsityCount count) {
  if (explanations.empty()) throw ValueError("sparsity_plus: need at least one explanation");
  double s = 0.0;
  for (const Explanation& ex : explanations) {
    double kept = 0.0, total = 0.0;
    if (count == SparsityCount::kEdges) {
      kept = ex.num_kept();
      total = ex.num_edges();
    } else {
      std::set<int> all, in;
      for (size_t e = 0; e < ex.all_edges.size(); ++e) {
        all.insert(ex.all_edges[e].src);
        all.insert(ex.all_edges[e].dst);
        if (ex.kept[e]) {
          in.insert(ex.all_edges[e].src);
          in.insert(ex.all_edges[e].dst);
        }
      }
      kept = static_cast<double>(in.size());
      total = static_cast<double>(all.size());
    }
    if (total > 0.0) s += 1.0 - kept / total;
  }
  return s / static_cast<double>(explanations.size());
}

double FidelityTerm(Model& model, const STWindow& window, const Explanation& explanation) {
  const Graph& full = explanation.kind == GraphKind::kSpatial ? model.spatial_graph().arcs()
                                                              : model.temporal_graph().arcs();
  if (full.edges() != explanation.all_edges) throw ShapeError("fidelity: explanation edges differ from the model graph");
  ForwardOptions base;
  base.mode = Mode::kEval;
  base.hard_structure = true;
  ForwardOptions masked = base;
  Graph rest = full.Subgraph(explanation.complement());
  if (explanation.kind == GraphKind::kSpatial) {
    masked.spatial_structure = std::move(rest);
  } else {
    masked.temporal_structure = std::move(rest);
  }
  const Tensor3 a = PredictTensor(model, window, base);
  const Tensor3 b = PredictTensor(model, window, masked);
  return (a.data - b.data).cwiseAbs().mean();
}

double FidelityPlus(Model& model, const std::vector<STWindow>& windows, const std::vector<Explanation>& explanations) {
  if (windows.size() != explanations.size()) throw ShapeError("fidelity_plus: one explanation per window expected");
  if (windows.empty()) throw ValueError("fidelity_plus: no windows");
  double s = 0.0;
  for (size_t i = 0; i < windows.size(); ++i) s += FidelityTerm(model, windows[i], explanations[i]);
  return s / static_cast<double>(windows.size());
}

Explanation RandomExplanation(GraphKind kind, const std::vector<Edge>& edges, int size, uint64_t seed) {
  if (size < 0 || size > static_cast<int>(edges.size())) throw ValueError("random_explanation: size exceeds |M|");
  std::vector<size_t> idx(edges.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates.
  for (int i = 0; i < size; ++i) {
    std::uniform_int_distribution<size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  Explanation ex{kind, edges, std::vector<bool>(edges.size(), false), {}};
  for (int i = 0; i < size; ++i) ex.kept[idx[i]] = true;
  return ex;
}

AucResult EdgeRecoveryAuc(const std::vector<Edge>& edges, const std::vector<double>& probs,
                          const std::vector<Edge>& planted) {
  if (edges.size() != probs.size()) throw ShapeError("edge_recovery_auc: probabilities do not match edges");
  const std::set<Edge> positives(planted.begin(), planted.end());
  const std::set<Edge> probed(edges.begin(), edges.end());
  for (const Edge& e : positives) {
    if (!probed.count(e)) throw ValueError("edge_recovery_auc: planted edge is not among the probed edges");
  }
  const size_t n = edges.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return probs[a] < probs[b]; });
  std::vector<double> rank(n);
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j + 1 < n && probs[idx[j + 1]] == probs[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) rank[idx[k]] = avg;
    i = j + 1;
  }
  double pos_rank = 0.0;
  size_t n_pos = 0;
  for (size_t e = 0; e < n; ++e) {
    if (positives.count(edges[e])) {
      pos_rank += rank[e];
      ++n_pos;
    }
  }
  const size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return {0.5, true};
  const double u = pos_rank - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return {u / (static_cast<double>(n_pos) * static_cast<double>(n_neg)), false};
}

ExplainReport RunExplain(Model& model, const std::vector<STWindow>& windows, const ExplainOptions& options) {
  if (windows.empty()) throw ValueError("explain: no windows");
  const std::vector<Edge>& se = model.spatial_graph().edges();
  const std::vector<Edge>& te = model.temporal_graph().arcs().edges();
  ExplainReport report;
  report.num_windows = static_cast<int>(windows.size());
  report.mean_spatial_probs.assign(se.size(), 0.0);
  report.mean_temporal_probs.assign(te.size(), 0.0);

  const GraphKind kinds[] = {GraphKind::kSpatial, GraphKind::kTemporal};
  std::vector<Explanation> expl[2], random[2];
  for (size_t w = 0; w < windows.size(); ++w) {
    const DistillResult d = Distill(model, windows[w]);
    for (size_t e = 0; e < se.size(); ++e) report.mean_spatial_probs[e] += d.spatial_probs[e] / windows.size();
    for (size_t e = 0; e < te.size(); ++e) report.mean_temporal_probs[e] += d.temporal_probs[e] / windows.size();
    for (int k = 0; k < 2; ++k) {
      const bool sp = kinds[k] == GraphKind::kSpatial;
      Explanation ex = ExtractExplanation(kinds[k], sp ? se : te, sp ? d.spatial_probs : d.temporal_probs,
                                          options.threshold, options.top_fraction);
      const uint64_t seed = options.baseline_seed + 2 * w + k;
      random[k].push_back(RandomExplanation(kinds[k], ex.all_edges, ex.num_kept(), seed));
      expl[k].push_back(std::move(ex));
    }
  }
  for (int k = 0; k < 2; ++k) {
    ExplainRow row;
    row.kind = kinds[k];
    row.sparsity = SparsityPlus(expl[k], options.count);
    row.fidelity = FidelityPlus(model, windows, expl[k]);
    row.baseline_fidelity = FidelityPlus(model, windows, random[k]);
    if (kinds[k] == GraphKind::kSpatial && !options.planted_edges.empty()) {
      const AucResult auc = EdgeRecoveryAuc(se, report.mean_spatial_probs, options.planted_edges);
      row.auc = auc.auc;
      row.auc_degenerate = auc.degenerate;
    }
    report.rows.push_back(row);
  }
  return report;
}

void WriteExplainCsv(std::ostream& os, const ExplainReport& report) {
  const auto old_precision = os.precision(10);
  os << "graph_kind,sparsity,fidelity,baseline_fidelity,auc\n";
  for (const ExplainRow& r : report.rows) {
    os << GraphKindName(r.kind) << ',' << r.sparsity << ',' << r.fidelity << ',' << r.baseline_fidelity << ',';
    if (r.auc) os << *r.auc;
    os << '\n';
  }
  os.precision(old_precision);
}

Json ExplainSummary(const ExplainReport& report) {
  Json j;
  j["num_windows"] = report.num_windows;
  Json rows = Json::array();
  for (const ExplainRow& r : report.rows) {
    Json row{{"graph_kind", GraphKindName(r.kind)},
             {"sparsity", r.sparsity},
             {"fidelity", r.fidelity},
             {"baseline_fidelity", r.baseline_fidelity}};
    if (r.auc) {
      row["auc"] = *r.auc;
      row["auc_degenerate"] = r.auc_degenerate;
    }
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  return j;
}

}  // namespace stgib
