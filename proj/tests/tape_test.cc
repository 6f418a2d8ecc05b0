#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stgib/errors.h"
#include "stgib/tape.h"
#include "test_util.h"

namespace stgib {
namespace {

using testing::InputGradError;
using testing::RandomMatrix;

// <v, c> for a fixed random c, so every output entry gets a distinct weight.
Var Project(Tape& t, Var v, uint64_t seed = 99) {
  const Matrix& val = t.value(v);
  std::mt19937_64 rng(seed);
  const int n = static_cast<int>(val.size());
  return ad::MatMul(t, ad::Reshape(t, v, 1, n), t.Constant(RandomMatrix(n, 1, rng)));
}

class TapeGrad : public ::testing::Test {
 protected:
  std::mt19937_64 rng{5};
  Matrix R(int r, int c) { return RandomMatrix(r, c, rng); }
};

TEST_F(TapeGrad, MatMul) {
  EXPECT_LT(InputGradError({R(3, 4), R(4, 2)},
                           [](Tape& t, const std::vector<Var>& v) { return Project(t, ad::MatMul(t, v[0], v[1])); }),
            1e-8);
  EXPECT_LT(InputGradError({R(3, 4), R(5, 4)},
                           [](Tape& t, const std::vector<Var>& v) { return Project(t, ad::MatMulTransB(t, v[0], v[1])); }),
            1e-8);
}

TEST_F(TapeGrad, Elementwise) {
  EXPECT_LT(InputGradError({R(3, 4), R(1, 4)},
                           [](Tape& t, const std::vector<Var>& v) { return Project(t, ad::AddRow(t, v[0], v[1])); }),
            1e-8);
  EXPECT_LT(InputGradError({R(3, 4), R(3, 4)},
                           [](Tape& t, const std::vector<Var>& v) {
                             return Project(t, ad::Sub(t, ad::Add(t, v[0], v[1]), ad::Scale(t, v[1], 3.0)));
                           }),
            1e-8);
  EXPECT_LT(InputGradError({R(2, 5)},
                           [](Tape& t, const std::vector<Var>& v) {
                             return Project(t, ad::Affine(t, ad::AddConstant(t, v[0], Matrix::Ones(2, 5)), -2.0, 4.0));
                           }),
            1e-8);
  EXPECT_LT(InputGradError({R(4, 4)}, [](Tape& t, const std::vector<Var>& v) { return Project(t, ad::Elu(t, v[0])); }),
            1e-7);
  EXPECT_LT(InputGradError({R(4, 4) * 5.0},
                           [](Tape& t, const std::vector<Var>& v) { return Project(t, ad::Sigmoid(t, v[0])); }),
            1e-8);
}

TEST_F(TapeGrad, ShapeOps) {
  EXPECT_LT(InputGradError({R(6, 2)},
                           [](Tape& t, const std::vector<Var>& v) { return Project(t, ad::SwapAxes01(t, v[0], 2, 3)); }),
            1e-8);
  EXPECT_LT(InputGradError({R(4, 3)},
                           [](Tape& t, const std::vector<Var>& v) {
                             return Project(t, ad::GatherRows(t, v[0], {3, 0, 3, 1}));
                           }),
            1e-8);
  EXPECT_LT(InputGradError({R(3, 2), R(3, 4)},
                           [](Tape& t, const std::vector<Var>& v) {
                             const Var parts[] = {v[0], v[1], v[0]};
                             return Project(t, ad::ConcatCols(t, parts));
                           }),
            1e-8);
  EXPECT_LT(InputGradError({R(3, 3)},
                           [](Tape& t, const std::vector<Var>& v) {
                             return ad::Add(t, ad::Sum(t, ad::Elu(t, v[0])), ad::Mean(t, ad::Sigmoid(t, v[0])));
                           }),
            1e-7);
}

TEST(Tape, SwapAxesMatchesIndexOracle) {
  std::mt19937_64 rng(1);
  const Matrix a = RandomMatrix(3 * 4, 2, rng);
  Tape t;
  const Matrix s = t.value(ad::SwapAxes01(t, t.Constant(a), 3, 4));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j)
      for (int c = 0; c < 2; ++c) EXPECT_EQ(s(j * 3 + i, c), a(i * 4 + j, c));
}

TEST(Tape, ShapeErrors) {
  Tape t;
  const Var a = t.Input(Matrix::Ones(2, 3));
  EXPECT_THROW(ad::MatMul(t, a, a), ShapeError);
  EXPECT_THROW(ad::Add(t, a, t.Input(Matrix::Ones(3, 2))), ShapeError);
  EXPECT_THROW(ad::Reshape(t, a, 4, 2), ShapeError);
  EXPECT_THROW(ad::GatherRows(t, a, {2}), IndexError);
}

TEST(Tape, ParamsAccumulateAcrossTapes) {
  ParamSet ps;
  Param& p = ps.Add("w", {2, 2}, Matrix::Ones(2, 2));
  for (int k = 0; k < 3; ++k) {
    Tape t;
    t.Backward(ad::Sum(t, t.Bind(p)));
  }
  EXPECT_TRUE(p.grad.isApprox(Matrix::Constant(2, 2, 3.0)));
  EXPECT_DOUBLE_EQ(ps.GradNorm(), 6.0);
  ps.ZeroGrad();
  EXPECT_TRUE(p.grad.isZero(0.0));
  EXPECT_THROW(ps.Add("w", {1}, Matrix::Ones(1, 1)), ValueError);
}

TEST(Tape, ConstantsReceiveNoGradient) {
  Tape t;
  const Var c = t.Constant(Matrix::Ones(2, 2));
  const Var x = t.Input(Matrix::Ones(2, 2));
  t.Backward(ad::Sum(t, ad::Add(t, c, x)));
  EXPECT_FALSE(t.requires_grad(c));
  EXPECT_TRUE(t.grad(c).isZero(0.0));
  EXPECT_TRUE(t.grad(x).isApprox(Matrix::Ones(2, 2)));
}

}  // namespace
}  // namespace stgib
