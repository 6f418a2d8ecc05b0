#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include <unistd.h>

#include "stgib/array_io.h"
#include "stgib/data.h"
#include "stgib/errors.h"
#include "stgib/experiment.h"

namespace stgib {
namespace {

Tensor3 Ramp(int T, int N, int F) {
  Tensor3 s(T, N, F);
  for (int t = 0; t < T; ++t)
    for (int n = 0; n < N; ++n)
      for (int f = 0; f < F; ++f) s(t, n, f) = t + 0.1 * n + 0.01 * f;
  return s;
}

// ---- graphs ------------------------------------------------------------------

TEST(GaussianGraph, ZeroCostAlwaysKept) {
  const SpatialGraph g = BuildSpatialGraphGaussian({{0, 1, 0.0}}, 0.3, 1.0, 2);
  EXPECT_TRUE(g.arcs().HasEdge({0, 1}));
}

TEST(GaussianGraph, CostEqualToSigmaDroppedAtHalf) {
  const SpatialGraph g = BuildSpatialGraphGaussian({{0, 1, 2.0}, {1, 0, 0.0}}, 2.0, 0.5, 2);
  EXPECT_FALSE(g.arcs().HasEdge({0, 1}));  // exp(-1) = 0.3679 < 0.5
  EXPECT_TRUE(g.arcs().HasEdge({1, 0}));
}

TEST(GaussianGraph, ThreeCloseSensorsKeepAllArcs) {
  std::vector<DistanceEntry> d;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      if (a != b) d.push_back({a, b, 1.0});
  EXPECT_EQ(BuildSpatialGraphGaussian(d, 10.0, 0.5).edges().size(), 6u);
}

TEST(GaussianGraph, Errors) {
  EXPECT_THROW(BuildSpatialGraphGaussian({{0, 1, 1.0}}, 0.0, 0.1), ValueError);
  EXPECT_THROW(BuildSpatialGraphGaussian({{0, 1, 100.0}}, 1.0, 0.5), ValueError);
  EXPECT_THROW(BuildSpatialGraphGaussian({{0, 1, -1.0}}, 1.0, 0.5), ValueError);
}

TEST(GaussianGraph, DefaultSigmaIsStdOfCosts) {
  EXPECT_NEAR(DefaultGaussianSigma({{0, 1, 1.0}, {1, 0, 3.0}}), 1.0, 1e-12);
}

TEST(GridGraph, Examples) {
  EXPECT_EQ(BuildSpatialGraphGrid(1, 1).edges().size(), 0u);
  EXPECT_EQ(BuildSpatialGraphGrid(2, 2).edges().size(), 12u);
  const SpatialGraph g = BuildSpatialGraphGrid(3, 3);
  int out_center = 0;
  for (const Edge& e : g.edges()) out_center += e.src == 4;
  EXPECT_EQ(out_center, 8);
}

TEST(GridGraph, ArcCountMatchesNeighborhoodsAndIsSymmetric) {
  for (auto [r, c] : {std::pair{1, 5}, {3, 4}, {5, 5}, {2, 7}}) {
    const SpatialGraph g = BuildSpatialGraphGrid(r, c);
    long expected = 0;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        for (int di = -1; di <= 1; ++di)
          for (int dj = -1; dj <= 1; ++dj)
            if ((di || dj) && i + di >= 0 && i + di < r && j + dj >= 0 && j + dj < c) ++expected;
    EXPECT_EQ(static_cast<long>(g.edges().size()), expected);
    for (const Edge& e : g.edges()) EXPECT_TRUE(g.arcs().HasEdge({e.dst, e.src}));
  }
}

TEST(TemporalGraphBuilder, Examples) {
  EXPECT_EQ(BuildTemporalGraph(1).adjacency().sum(), 1);
  EXPECT_EQ(BuildTemporalGraph(12).adjacency().sum(), 144);
}

TEST(CandidateGraph, ContainsPlantedPlusDistractors) {
  const auto planted = RandomPlantedEdges(8, 12, 3);
  EXPECT_EQ(planted.size(), 12u);
  const SpatialGraph g = BuildCandidateGraph(8, planted, 10, 4);
  EXPECT_EQ(g.edges().size(), 22u);
  for (const Edge& e : planted) EXPECT_TRUE(g.arcs().HasEdge(e));
  EXPECT_EQ(BuildCandidateGraph(8, planted, 44, 1).edges().size(), 56u);
  EXPECT_THROW(BuildCandidateGraph(8, planted, 45, 1), ValueError);
}

// ---- splits ------------------------------------------------------------------

TEST(Split, SixTwoTwo) {
  SplitPlan p = SplitByRatios(100, 0.6, 0.2, 2);
  EXPECT_EQ(p.train.length, 60);
  EXPECT_EQ(p.val.length, 20);
  EXPECT_EQ(p.test.length, 20);
  p = SplitByRatios(101, 0.6, 0.2, 2);
  EXPECT_EQ(p.train.length, 60);
  EXPECT_EQ(p.val.length, 20);
  EXPECT_EQ(p.test.length, 21);
  EXPECT_THROW(SplitByRatios(100, 0.6, 0.2, 24), ValueError);
}

TEST(Split, CrimeSevenToOneWithLastMonthValidation) {
  const SplitPlan p = SplitCrime(730, 30, 30, 1);
  EXPECT_EQ(p.train.length, 609);
  EXPECT_EQ(p.val.length, 30);
  EXPECT_EQ(p.train.length + p.val.length, 639);
  EXPECT_EQ(p.test.length, 91);
}

TEST(Split, DisjointOrderedAndCoversSeries) {
  for (int T : {50, 97, 1000, 2001}) {
    const SplitPlan p = SplitByRatios(T, 0.6, 0.2, 2);
    EXPECT_EQ(p.train.begin, 0);
    EXPECT_EQ(p.val.begin, p.train.end());
    EXPECT_EQ(p.test.begin, p.val.end());
    EXPECT_EQ(p.test.end(), T);
    const Tensor3 s = Ramp(T, 2, 1);
    Matrix joined(T * 2, 1);
    joined << SliceSteps(s, p.train.begin, p.train.length).data, SliceSteps(s, p.val.begin, p.val.length).data,
        SliceSteps(s, p.test.begin, p.test.length).data;
    EXPECT_TRUE(joined == s.data);
  }
}

// ---- windows -----------------------------------------------------------------

TEST(Window, Counts) {
  const Scaler sc{0.0, 1.0};
  EXPECT_EQ(WindowDataset(Ramp(30, 3, 1), {12, 12, 288, 0}, sc).size(), 7u);
  EXPECT_EQ(WindowDataset(Ramp(24, 3, 1), {12, 12, 288, 0}, sc).size(), 1u);
  EXPECT_THROW(WindowDataset(Ramp(23, 3, 1), {12, 12, 288, 0}, sc), ValueError);
  for (int T : {25, 40, 100})
    for (int L : {1, 3, 12})
      for (int Lo : {1, 5})
        EXPECT_EQ(static_cast<int>(WindowDataset(Ramp(T, 2, 1), {L, Lo, 288, 0}, sc).size()), T - L - Lo + 1);
}

TEST(Window, ConstantSeriesNormalizesToZero) {
  Tensor3 s(40, 3, 2);
  s.data.setConstant(7.25);
  const Scaler sc = FitScaler(s);
  EXPECT_EQ(sc.std, 1.0);
  for (const STWindow& w : WindowDataset(s, {4, 2, 288, 0}, sc)) {
    EXPECT_TRUE(w.features.data.isZero(0.0));
    EXPECT_TRUE((w.targets.data.array() == 7.25).all());
  }
}

TEST(Window, FeaturesInverseScaleToRawAndTargetsStayRaw) {
  const Tensor3 s = Ramp(60, 4, 2);
  const Scaler sc = FitScaler(s);
  const auto ws = WindowDataset(s, {5, 3, 288, 0}, sc);
  for (size_t k = 0; k < ws.size(); ++k) {
    for (int i = 0; i < 5; ++i)
      for (int n = 0; n < 4; ++n)
        for (int f = 0; f < 2; ++f) {
          const double raw = s(static_cast<int>(k) + i, n, f);
          EXPECT_NEAR(sc.Inverse(ws[k].features(i, n, f)), raw, 1e-9 * std::max(1.0, std::abs(raw)));
        }
    for (int i = 0; i < 3; ++i) EXPECT_EQ(ws[k].targets(i, 1, 1), s(static_cast<int>(k) + 5 + i, 1, 1));
  }
}

TEST(Window, CalendarIndicesFollowAbsoluteTime) {
  const auto ws = WindowDataset(Ramp(30, 2, 1), {4, 1, 5, 33}, Scaler{});
  const STWindow& w = ws[2];  // starts at absolute step 35
  EXPECT_EQ(w.tod_index, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(w.dow_index, (std::vector<int>{0, 0, 0, 0}));
  EXPECT_EQ(ws[0].tod_index, (std::vector<int>{3, 4, 0, 1}));
  EXPECT_EQ(ws[0].dow_index, (std::vector<int>{6, 6, 0, 0}));
  for (const STWindow& x : ws) EXPECT_NO_THROW(ValidateWindow(x, SpatialGraph(2, {}), 5));
}

TEST(Window, ContextWindowsStartTargetsAtBoundary) {
  const Tensor3 s = Ramp(50, 2, 1);
  const auto ws = WindowDatasetWithContext(s, 20, {6, 2, 288, 0}, Scaler{});
  ASSERT_FALSE(ws.empty());
  EXPECT_EQ(ws.front().targets(0, 0, 0), 20.0);
  EXPECT_EQ(ws.size(), 50u - 20u - 2u + 1u);
}

TEST(Window, CrimeValidationUsesPrecedingHistory) {
  ExperimentConfig cfg;
  cfg.task = Task::kCrime;
  cfg.input_steps = 30;
  cfg.output_steps = 1;
  cfg.model.steps_per_day = 1;
  const PreparedData d = PrepareSeries(cfg, Ramp(730, 4, 1), BuildSpatialGraphGrid(2, 2));
  EXPECT_EQ(d.train.size(), 609u - 31u + 1u);
  EXPECT_EQ(d.val.size(), 30u);
  EXPECT_EQ(d.test.size(), 91u);
  EXPECT_EQ(d.val.front().targets(0, 0, 0), 609.0);
  EXPECT_EQ(d.test.front().targets(0, 0, 0), 639.0);
}

TEST(Scaler, FitOnTrainingSplitOnly) {
  ExperimentConfig cfg;
  cfg.input_steps = 2;
  cfg.output_steps = 2;
  cfg.model.steps_per_day = 24;
  const Tensor3 s = Ramp(100, 1, 1);
  const PreparedData d = PrepareSeries(cfg, s, SpatialGraph(1, {}));
  EXPECT_NEAR(d.scaler.mean, 29.5, 1e-12);  // mean of 0..59
}

// ---- corruption ----------------------------------------------------------------

TEST(Corrupt, IdentityAndAllZero) {
  const Tensor3 s = Ramp(20, 3, 2);
  EXPECT_EQ(CorruptMissing(s, 0.0, 1), s);
  EXPECT_TRUE(CorruptMissing(s, 1.0, 1).data.isZero(0.0));
  EXPECT_THROW(CorruptMissing(s, 1.5, 1), ValueError);
}

TEST(Corrupt, DropFractionAndDeterminism) {
  Tensor3 s(5000, 10, 1);
  s.data.setOnes();
  const Tensor3 c = CorruptMissing(s, 0.3, 42);
  const double dropped = 1.0 - c.data.sum() / s.data.sum();
  EXPECT_NEAR(dropped, 0.3, 0.02);
  EXPECT_EQ(CorruptMissing(s, 0.3, 42), c);
}

// ---- synthetic -------------------------------------------------------------------

TEST(Synthetic, NodeWithoutParentsIsPureSinusoid) {
  SyntheticSpec spec;
  spec.num_nodes = 3;
  spec.total_steps = 100;
  spec.planted_edges = {{0, 1}};
  spec.noise_std = 0.0;
  const SyntheticData d = GenerateSynthetic(spec);
  for (int t = 0; t < 100; ++t) {
    for (int v : {0, 2}) {
      EXPECT_NEAR(d.values(t, v, 0), 0.5 * std::sin(2.0 * std::numbers::pi * (t - 1) / spec.period) * d.node_scales[v],
                  1e-12);
    }
  }
  for (double s : d.node_scales) {
    EXPECT_GE(s, 0.5);
    EXPECT_LE(s, 1.5);
  }
}

TEST(Synthetic, SameSeedSameArrays) {
  SyntheticSpec spec;
  spec.planted_edges = RandomPlantedEdges(8, 12, 5);
  spec.seed = 11;
  EXPECT_EQ(GenerateSynthetic(spec).values, GenerateSynthetic(spec).values);
  SyntheticSpec other = spec;
  other.seed = 12;
  EXPECT_FALSE(GenerateSynthetic(spec).values == GenerateSynthetic(other).values);
}

TEST(Synthetic, ImpulseReachesGrandchildAtQuarterAmplitude) {
  const Graph chain(3, {{0, 1}, {1, 2}});
  const std::vector<double> scales{1.0, 0.7, 1.3};
  Eigen::VectorXd base = Eigen::VectorXd::Zero(3), kicked = base;
  kicked(0) = 1.0;
  for (int t = 0; t < 2; ++t) {
    base = SyntheticStep(base, t, chain, scales, 24);
    kicked = SyntheticStep(kicked, t, chain, scales, 24);
  }
  EXPECT_NEAR(kicked(2) - base(2), 0.25, 1e-12);
  EXPECT_NEAR(kicked(1) - base(1), 0.0, 1e-12);
}

TEST(Synthetic, MatchesRecurrenceOracle) {
  SyntheticSpec spec;
  spec.num_nodes = 4;
  spec.total_steps = 50;
  spec.planted_edges = {{0, 1}, {2, 1}, {1, 3}};
  spec.noise_std = 0.0;
  const SyntheticData d = GenerateSynthetic(spec);
  for (int t = 0; t + 1 < 50; ++t) {
    const double phase = 0.5 * std::sin(2.0 * std::numbers::pi * t / 24);
    EXPECT_NEAR(d.values(t + 1, 1, 0), 0.5 * 0.5 * (d.values(t, 0, 0) + d.values(t, 2, 0)) + phase * d.node_scales[1],
                1e-12);
    EXPECT_NEAR(d.values(t + 1, 3, 0), 0.5 * d.values(t, 1, 0) + phase * d.node_scales[3], 1e-12);
  }
}

TEST(Synthetic, EmptyPlantedSetRejected) {
  SyntheticSpec spec;
  EXPECT_THROW(GenerateSynthetic(spec), ValueError);
}

// ---- files -----------------------------------------------------------------------

class FileTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / ("stgib_data_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(FileTest, ArrayRoundTrip) {
  const Tensor3 s = Ramp(7, 3, 2);
  WriteArray(dir_ / "a.arr", SeriesToArray(s));
  EXPECT_EQ(ArrayToSeries(ReadArray(dir_ / "a.arr")), s);
  NdArray grid{{2, 2, 3, 4}, std::vector<double>(48)};
  for (size_t i = 0; i < 48; ++i) grid.values[i] = static_cast<double>(i);
  const Tensor3 flat = ArrayToSeries(grid);
  EXPECT_EQ(flat.dim1, 6);
  EXPECT_EQ(flat(1, 5, 3), 47.0);
}

TEST_F(FileTest, ArrayErrors) {
  std::ofstream(dir_ / "bad.arr") << "NOPE 1\nshape 2\n";
  EXPECT_THROW(ReadArray(dir_ / "bad.arr"), VersionError);
  std::ofstream(dir_ / "short.arr") << "STGIB-ARRAY 1\nshape 4\n";
  EXPECT_THROW(ReadArray(dir_ / "short.arr"), IoError);
  EXPECT_THROW(ReadArray(dir_ / "missing.arr"), IoError);
}

TEST_F(FileTest, DistancesAndEdgeLists) {
  const std::vector<DistanceEntry> d{{0, 1, 2.5}, {1, 2, 0.0}};
  WriteDistances(dir_ / "d.csv", d);
  const auto back = ReadDistances(dir_ / "d.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].to, 1);
  EXPECT_EQ(back[0].cost, 2.5);
  const std::vector<Edge> e{{0, 3}, {2, 1}};
  WriteEdgeList(dir_ / "e.json", 4, e);
  int n = 0;
  EXPECT_EQ(ReadEdgeList(dir_ / "e.json", &n), e);
  EXPECT_EQ(n, 4);
}

}  // namespace
}  // namespace stgib
