#ifndef STGIB_DATA_H_
#define STGIB_DATA_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "stgib/array_io.h"
#include "stgib/types.h"

namespace stgib {

struct RawTrafficData {
  Tensor3 values;  // (T_total, N, F)
  std::vector<DistanceEntry> distances;
  int interval_minutes = 5;
};

struct RawGridData {
  int rows = 0;
  int cols = 0;
  Tensor3 values;  // (D_total, rows*cols, C) daily counts
};

struct SyntheticSpec {
  int num_nodes = 8;
  int total_steps = 2000;
  std::vector<Edge> planted_edges;
  double noise_std = 0.1;
  uint64_t seed = 0;
  int period = 24;
};

struct SyntheticData {
  Tensor3 values;  // (T_total, N, 1)
  std::vector<Edge> planted_edges;
  std::vector<double> node_scales;
};

// ---- graph construction ---------------------------------------------------

// Standard deviation of all listed costs (the default kernel width).
double DefaultGaussianSigma(const std::vector<DistanceEntry>& distances);

// Keeps arc from->to iff exp(-cost^2 / sigma^2) >= threshold. Self pairs are
// dropped (self-loops are implicit). num_nodes defaults to max id + 1.
SpatialGraph BuildSpatialGraphGaussian(const std::vector<DistanceEntry>& distances, double sigma,
                                       double threshold, std::optional<int> num_nodes = std::nullopt);

// 8-neighborhood on a rows x cols grid, both directions; cell id = r*cols + c.
SpatialGraph BuildSpatialGraphGrid(int rows, int cols);

// Every ordered pair v != u.
SpatialGraph BuildCompleteGraph(int num_nodes);

TemporalGraph BuildTemporalGraph(int steps);

// ---- splitting, scaling, windowing ----------------------------------------

struct SplitRange {
  int begin = 0;
  int length = 0;
  int end() const { return begin + length; }
};

struct SplitPlan {
  SplitRange train;
  SplitRange val;
  SplitRange test;
  // Steps of preceding history that val/test windows may read as inputs.
  // Zero for the strict chronological traffic protocol.
  int history_context = 0;
};

// Chronological split by ratios; floor for train/val, remainder to test.
// Throws if any split is shorter than min_length.
SplitPlan SplitByRatios(int total_steps, double train_ratio, double val_ratio, int min_length);

// Train:test = 7:1 (test = floor(T/8)), with the last `val_steps` of the
// training span carved out for validation. Val/test windows read up to
// `input_steps` steps of preceding history.
SplitPlan SplitCrime(int total_steps, int val_steps, int input_steps, int output_steps);

Tensor3 SliceSteps(const Tensor3& series, int begin, int length);

// Single (mean, std) over every entry; std is replaced by 1 when zero.
Scaler FitScaler(const Tensor3& train_values);

struct WindowSpec {
  int input_steps = 12;   // L
  int output_steps = 12;  // L'
  int steps_per_day = 288;
  // Absolute time index of row 0 of the series passed to WindowDataset.
  int time_offset = 0;
};

// Sliding windows with stride 1: T - L - L' + 1 windows. Features are
// z-scored with `scaler`; targets stay raw and are read from
// `target_values` when given (same shape as `values`).
std::vector<STWindow> WindowDataset(const Tensor3& values, const WindowSpec& spec, const Scaler& scaler,
                                    const Tensor3* target_values = nullptr);

// Windows whose targets start at or after `first_target_step` (relative to
// `values`), used when a split carries a history prefix.
std::vector<STWindow> WindowDatasetWithContext(const Tensor3& values, int first_target_step,
                                               const WindowSpec& spec, const Scaler& scaler,
                                               const Tensor3* target_values = nullptr);

// Zeroes all features of each (step, node) independently with probability
// drop_prob.
Tensor3 CorruptMissing(const Tensor3& values, double drop_prob, uint64_t seed);

// ---- synthetic planted-structure data -------------------------------------

// One noiseless step of the planted recurrence:
//   x_{t+1}(v) = 0.5 * mean_{(u,v) planted} x_t(u) + 0.5 * sin(2*pi*t/P) * s_v
Eigen::VectorXd SyntheticStep(const Eigen::VectorXd& state, int t, const Graph& planted,
                              const std::vector<double>& scales, int period);

SyntheticData GenerateSynthetic(const SyntheticSpec& spec);

// `count` distinct ordered pairs v != u drawn uniformly, sorted.
std::vector<Edge> RandomPlantedEdges(int num_nodes, int count, uint64_t seed);

// The planted arcs plus `distractors` further arcs drawn uniformly from the
// remaining ordered pairs; sorted.
SpatialGraph BuildCandidateGraph(int num_nodes, const std::vector<Edge>& planted, int distractors, uint64_t seed);

}  // namespace stgib

#endif  // STGIB_DATA_H_
