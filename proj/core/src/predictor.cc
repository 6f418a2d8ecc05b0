#include "stgib/predictor.h"

#include "stgib/errors.h"
#include "stgib/init.h"

namespace stgib {

void InitPredictorParams(ParamSet& params, const ModelConfig& cfg, const PredictorShape& shape,
                         std::mt19937_64& rng) {
  const int d = cfg.embed_dim;
  const int dx = cfg.lift_dim();
  const int fused = shape.input_steps * (4 * d + dx);
  const int out = shape.output_steps * shape.output_features;
  params.Add("predictor.region", {shape.num_nodes, d}, NormalInit(shape.num_nodes, d, 0.1, rng));
  params.Add("predictor.tod", {cfg.steps_per_day, d}, NormalInit(cfg.steps_per_day, d, 0.1, rng));
  params.Add("predictor.dow", {7, d}, NormalInit(7, d, 0.1, rng));
  params.Add("predictor.lift_W", {shape.features, dx}, GlorotUniform(shape.features, dx, shape.features, dx, rng));
  params.Add("predictor.lift_b", {dx}, Matrix::Zero(1, dx));
  params.Add("predictor.head_W1", {fused, cfg.head_hidden},
             GlorotUniform(fused, cfg.head_hidden, fused, cfg.head_hidden, rng));
  params.Add("predictor.head_b1", {cfg.head_hidden}, Matrix::Zero(1, cfg.head_hidden));
  params.Add("predictor.head_W2", {cfg.head_hidden, out}, GlorotUniform(cfg.head_hidden, out, cfg.head_hidden, out, rng));
  params.Add("predictor.head_b2", {out}, Matrix::Zero(1, out));
}

PredictorVars BindPredictor(Tape& tape, ParamSet& params) {
  PredictorVars v;
  v.region = tape.Bind(params.at("predictor.region"));
  v.tod = tape.Bind(params.at("predictor.tod"));
  v.dow = tape.Bind(params.at("predictor.dow"));
  v.lift_W = tape.Bind(params.at("predictor.lift_W"));
  v.lift_b = tape.Bind(params.at("predictor.lift_b"));
  v.head_W1 = tape.Bind(params.at("predictor.head_W1"));
  v.head_b1 = tape.Bind(params.at("predictor.head_b1"));
  v.head_W2 = tape.Bind(params.at("predictor.head_W2"));
  v.head_b2 = tape.Bind(params.at("predictor.head_b2"));
  return v;
}

TemporalPositions LookupPositions(Tape& t, const PredictorVars& p, const std::vector<int>& tod_index,
                                  const std::vector<int>& dow_index) {
  const int tod_rows = static_cast<int>(t.value(p.tod).rows());
  for (int i : tod_index) {
    if (i < 0 || i >= tod_rows) throw IndexError("lookup_positions: time-of-day index " + std::to_string(i) + " out of range");
  }
  for (int i : dow_index) {
    if (i < 0 || i >= 7) throw IndexError("lookup_positions: day-of-week index " + std::to_string(i) + " out of range");
  }
  return {ad::GatherRows(t, p.tod, tod_index), ad::GatherRows(t, p.dow, dow_index)};
}

Var Predict(Tape& t, const PredictorVars& p, Var h, Var x, const std::vector<int>& tod_index,
            const std::vector<int>& dow_index, const PredictorShape& shape) {
  const int L = shape.input_steps, N = shape.num_nodes;
  const Eigen::Index rows = static_cast<Eigen::Index>(L) * N;
  if (t.value(h).rows() != rows) throw ShapeError("predict: H must be (L*N) x d");
  if (t.value(x).rows() != rows || t.value(x).cols() != shape.features) throw ShapeError("predict: X must be (L*N) x F");
  if (static_cast<int>(tod_index.size()) != L || static_cast<int>(dow_index.size()) != L) {
    throw ShapeError("predict: calendar indices must have length L");
  }
  if (t.value(p.region).rows() != N) throw ShapeError("predict: region table must have N rows");

  const TemporalPositions pos = LookupPositions(t, p, tod_index, dow_index);
  std::vector<int> node_of_row(rows), step_of_row(rows);
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < N; ++j) {
      node_of_row[i * N + j] = j;
      step_of_row[i * N + j] = i;
    }
  }
  const Var parts[] = {
      h,
      ad::GatherRows(t, p.region, node_of_row),
      ad::GatherRows(t, pos.tod, step_of_row),
      ad::GatherRows(t, pos.dow, step_of_row),
      ad::AddRow(t, ad::MatMul(t, x, p.lift_W), p.lift_b),
  };
  Var fused = ad::ConcatCols(t, parts);  // (L*N) x C
  const int c = static_cast<int>(t.value(fused).cols());
  if (t.value(p.head_W1).rows() != static_cast<Eigen::Index>(L) * c) throw ShapeError("predict: head input width mismatch");
  Var per_node = ad::Reshape(t, ad::SwapAxes01(t, fused, L, N), N, L * c);
  Var hidden = ad::Elu(t, ad::AddRow(t, ad::MatMul(t, per_node, p.head_W1), p.head_b1));
  Var out = ad::AddRow(t, ad::MatMul(t, hidden, p.head_W2), p.head_b2);  // N x (L'*F')
  if (t.value(out).cols() != static_cast<Eigen::Index>(shape.output_steps) * shape.output_features) {
    throw ShapeError("predict: head output width differs from L'*F'");
  }
  return ad::SwapAxes01(t, ad::Reshape(t, out, N * shape.output_steps, shape.output_features), N,
                        shape.output_steps);
}

}  // namespace stgib
