#include "stgib/data.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "stgib/errors.h"

namespace stgib {

double DefaultGaussianSigma(const std::vector<DistanceEntry>& distances) {
  if (distances.empty()) throw ValueError("distances: empty list");
  double mean = 0.0;
  for (const auto& d : distances) mean += d.cost;
  mean /= static_cast<double>(distances.size());
  double var = 0.0;
  for (const auto& d : distances) var += (d.cost - mean) * (d.cost - mean);
  return std::sqrt(var / static_cast<double>(distances.size()));
}

SpatialGraph BuildSpatialGraphGaussian(const std::vector<DistanceEntry>& distances, double sigma,
                                       double threshold, std::optional<int> num_nodes) {
  if (!(sigma > 0.0)) throw ValueError("gaussian kernel: sigma must be > 0");
  if (threshold < 0.0 || threshold > 1.0) throw ValueError("gaussian kernel: threshold must be in [0, 1]");
  int n = num_nodes.value_or(0);
  if (!num_nodes) {
    for (const auto& d : distances) n = std::max({n, d.from + 1, d.to + 1});
  }
  std::set<Edge> kept;
  for (const auto& d : distances) {
    if (d.cost < 0.0) throw ValueError("gaussian kernel: negative cost");
    if (d.from < 0 || d.to < 0 || d.from >= n || d.to >= n) throw ValueError("gaussian kernel: node id out of range");
    if (d.from == d.to) continue;
    const double w = std::exp(-(d.cost * d.cost) / (sigma * sigma));
    if (w >= threshold) kept.insert({d.from, d.to});
  }
  if (kept.empty()) throw ValueError("gaussian kernel: no edges survive the threshold");
  return SpatialGraph(n, std::vector<Edge>(kept.begin(), kept.end()));
}

SpatialGraph BuildSpatialGraphGrid(int rows, int cols) {
  if (rows < 1 || cols < 1) throw ValueError("grid graph: rows and cols must be >= 1");
  std::vector<Edge> edges;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int rr = r + dr;
          const int cc = c + dc;
          if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
          edges.push_back({r * cols + c, rr * cols + cc});
        }
      }
    }
  }
  return SpatialGraph(rows * cols, std::move(edges));
}

SpatialGraph BuildCompleteGraph(int num_nodes) {
  std::vector<Edge> edges;
  for (int v = 0; v < num_nodes; ++v) {
    for (int u = 0; u < num_nodes; ++u) {
      if (u != v) edges.push_back({v, u});
    }
  }
  return SpatialGraph(num_nodes, std::move(edges));
}

TemporalGraph BuildTemporalGraph(int steps) { return TemporalGraph(steps); }

SplitPlan SplitByRatios(int total_steps, double train_ratio, double val_ratio, int min_length) {
  if (train_ratio <= 0.0 || val_ratio < 0.0 || train_ratio + val_ratio >= 1.0) {
    throw ValueError("split: ratios must leave a positive test share");
  }
  SplitPlan plan;
  const int train = static_cast<int>(std::floor(total_steps * train_ratio + 1e-9));
  const int val = static_cast<int>(std::floor(total_steps * val_ratio + 1e-9));
  plan.train = {0, train};
  plan.val = {train, val};
  plan.test = {train + val, total_steps - train - val};
  for (const SplitRange* r : {&plan.train, &plan.val, &plan.test}) {
    if (r->length < min_length) {
      throw ValueError("split: a split of length " + std::to_string(r->length) + " is shorter than L + L' = " +
                       std::to_string(min_length));
    }
  }
  return plan;
}

SplitPlan SplitCrime(int total_steps, int val_steps, int input_steps, int output_steps) {
  SplitPlan plan;
  const int test = total_steps / 8;
  const int train_all = total_steps - test;
  const int train = train_all - val_steps;
  plan.train = {0, train};
  plan.val = {train, val_steps};
  plan.test = {train_all, test};
  plan.history_context = input_steps;
  if (train < input_steps + output_steps) throw ValueError("split: training span shorter than L + L'");
  if (val_steps < output_steps || test < output_steps) throw ValueError("split: val/test span shorter than L'");
  return plan;
}

Tensor3 SliceSteps(const Tensor3& series, int begin, int length) {
  if (begin < 0 || length < 0 || begin + length > series.dim0) throw ShapeError("SliceSteps: range out of bounds");
  const Eigen::Index rows_per_step = series.dim1;
  return Tensor3(length, series.dim1, series.dim2,
                 series.data.middleRows(begin * rows_per_step, length * rows_per_step));
}

Scaler FitScaler(const Tensor3& train_values) {
  if (train_values.data.size() == 0) throw ValueError("FitScaler: empty training split");
  Scaler s;
  s.mean = train_values.data.mean();
  const double var = (train_values.data.array() - s.mean).square().mean();
  s.std = std::sqrt(var);
  if (!(s.std > 0.0)) s.std = 1.0;
  return s;
}

std::vector<STWindow> WindowDatasetWithContext(const Tensor3& values, int first_target_step,
                                               const WindowSpec& spec, const Scaler& scaler,
                                               const Tensor3* target_values) {
  const int L = spec.input_steps;
  const int Lo = spec.output_steps;
  if (L < 1 || Lo < 1) throw ValueError("window: L and L' must be >= 1");
  if (spec.steps_per_day < 1) throw ValueError("window: steps_per_day must be >= 1");
  if (values.dim0 < L + Lo) throw ValueError("window: series shorter than L + L'");
  const Tensor3& tv = target_values != nullptr ? *target_values : values;
  if (tv.dim0 != values.dim0 || tv.dim1 != values.dim1 || tv.dim2 != values.dim2) {
    throw ShapeError("window: target series shape differs from feature series");
  }
  const int N = values.dim1;
  const int F = values.dim2;
  const int first_start = std::max(0, first_target_step - L);
  std::vector<STWindow> out;
  for (int start = first_start; start + L + Lo <= values.dim0; ++start) {
    STWindow w;
    w.features = Tensor3(L, N, F, (values.data.middleRows(static_cast<Eigen::Index>(start) * N, L * N).array() -
                                   scaler.mean) / scaler.std);
    w.targets = Tensor3(Lo, N, F, tv.data.middleRows(static_cast<Eigen::Index>(start + L) * N, Lo * N));
    w.tod_index.resize(L);
    w.dow_index.resize(L);
    for (int i = 0; i < L; ++i) {
      const long t = static_cast<long>(spec.time_offset) + start + i;
      w.tod_index[i] = static_cast<int>(t % spec.steps_per_day);
      w.dow_index[i] = static_cast<int>((t / spec.steps_per_day) % 7);
    }
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<STWindow> WindowDataset(const Tensor3& values, const WindowSpec& spec, const Scaler& scaler,
                                    const Tensor3* target_values) {
  return WindowDatasetWithContext(values, 0, spec, scaler, target_values);
}

Tensor3 CorruptMissing(const Tensor3& values, double drop_prob, uint64_t seed) {
  if (drop_prob < 0.0 || drop_prob > 1.0) throw ValueError("corrupt_missing: drop_prob must be in [0, 1]");
  Tensor3 out = values;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Eigen::Index r = 0; r < out.data.rows(); ++r) {
    if (unif(rng) < drop_prob) out.data.row(r).setZero();
  }
  return out;
}

Eigen::VectorXd SyntheticStep(const Eigen::VectorXd& state, int t, const Graph& planted,
                              const std::vector<double>& scales, int period) {
  const int n = planted.num_nodes();
  Eigen::VectorXd next(n);
  const double phase = std::sin(2.0 * std::numbers::pi * t / period);
  const auto& off = planted.in_offsets();
  const auto& src = planted.in_sources();
  for (int v = 0; v < n; ++v) {
    double parent = 0.0;
    const int deg = off[v + 1] - off[v];
    for (int s = off[v]; s < off[v + 1]; ++s) parent += state(src[s]);
    if (deg > 0) parent /= deg;
    next(v) = 0.5 * parent + 0.5 * phase * scales[v];
  }
  return next;
}

SyntheticData GenerateSynthetic(const SyntheticSpec& spec) {
  if (spec.planted_edges.empty()) throw ValueError("synthetic: planted_edges must be non-empty");
  if (spec.num_nodes < 1 || spec.total_steps < 1) throw ValueError("synthetic: num_nodes and total_steps must be >= 1");
  if (spec.noise_std < 0.0) throw ValueError("synthetic: noise_std must be >= 0");
  if (spec.period < 1) throw ValueError("synthetic: period must be >= 1");
  const Graph planted(spec.num_nodes, spec.planted_edges);

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> scale_dist(0.5, 1.5);
  std::normal_distribution<double> noise(0.0, 1.0);

  SyntheticData data;
  data.planted_edges = spec.planted_edges;
  data.node_scales.resize(spec.num_nodes);
  for (double& s : data.node_scales) s = scale_dist(rng);

  data.values = Tensor3(spec.total_steps, spec.num_nodes, 1);
  // Start as if stepped from t = -1 out of a zero state.
  Eigen::VectorXd state = SyntheticStep(Eigen::VectorXd::Zero(spec.num_nodes), -1, planted, data.node_scales,
                                        spec.period);
  for (int v = 0; v < spec.num_nodes; ++v) state(v) += spec.noise_std * noise(rng);
  for (int t = 0; t < spec.total_steps; ++t) {
    for (int v = 0; v < spec.num_nodes; ++v) data.values(t, v, 0) = state(v);
    state = SyntheticStep(state, t, planted, data.node_scales, spec.period);
    for (int v = 0; v < spec.num_nodes; ++v) state(v) += spec.noise_std * noise(rng);
  }
  return data;
}

std::vector<Edge> RandomPlantedEdges(int num_nodes, int count, uint64_t seed) {
  const long pairs = static_cast<long>(num_nodes) * (num_nodes - 1);
  if (count < 0 || count > pairs) throw ValueError("planted edges: count exceeds the number of ordered pairs");
  std::vector<Edge> all;
  all.reserve(pairs);
  for (int v = 0; v < num_nodes; ++v) {
    for (int u = 0; u < num_nodes; ++u) {
      if (v != u) all.push_back({v, u});
    }
  }
  std::mt19937_64 rng(seed);
  for (int i = 0; i < count; ++i) {
    std::uniform_int_distribution<size_t> pick(i, all.size() - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  std::vector<Edge> out(all.begin(), all.begin() + count);
  std::sort(out.begin(), out.end());
  return out;
}

SpatialGraph BuildCandidateGraph(int num_nodes, const std::vector<Edge>& planted, int distractors, uint64_t seed) {
  const std::set<Edge> chosen(planted.begin(), planted.end());
  std::vector<Edge> rest;
  for (int v = 0; v < num_nodes; ++v) {
    for (int u = 0; u < num_nodes; ++u) {
      if (v != u && !chosen.count({v, u})) rest.push_back({v, u});
    }
  }
  if (distractors < 0 || distractors > static_cast<int>(rest.size())) {
    throw ValueError("candidate graph: not enough non-planted pairs for the requested distractors");
  }
  std::mt19937_64 rng(seed);
  for (int i = 0; i < distractors; ++i) {
    std::uniform_int_distribution<size_t> pick(i, rest.size() - 1);
    std::swap(rest[i], rest[pick(rng)]);
  }
  std::vector<Edge> edges(chosen.begin(), chosen.end());
  edges.insert(edges.end(), rest.begin(), rest.begin() + distractors);
  std::sort(edges.begin(), edges.end());
  return SpatialGraph(num_nodes, std::move(edges));
}

}  // namespace stgib
