#include "stgib/model.h"

#include <algorithm>
#include <ostream>

#include "stgib/errors.h"

namespace stgib {

namespace {

constexpr char kSpatialScorer[] = "distill.spatial";
constexpr char kTemporalScorer[] = "distill.temporal";

// Keeps probabilities strictly positive so they remain valid edge weights
// when the sigmoid underflows; gradient passes only above the floor.
Var FloorProbs(Tape& t, Var p) {
  constexpr double kFloor = 1e-12;
  const Matrix& v = t.value(p);
  if (!v.allFinite()) throw NumericError("forward: non-finite edge probability");
  if (v.minCoeff() >= kFloor) return p;
  Matrix out = v.cwiseMax(kFloor);
  return t.Record(std::move(out), {p}, [p](Tape& tp, Var self) {
    const Matrix& in = tp.value(p);
    Matrix g = tp.grad_ref(self);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (in.data()[i] < kFloor) g.data()[i] = 0.0;
    }
    tp.AccumulateGrad(p, g);
  });
}

Var ZeroScalar(Tape& t) { return t.Constant(Matrix::Zero(1, 1)); }

std::vector<bool> DropMask(int num_edges, double drop_p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<bool> keep(num_edges);
  for (int e = 0; e < num_edges; ++e) keep[e] = unif(rng) >= drop_p;
  return keep;
}

}  // namespace

Model::Model(ModelConfig config, ModelDims dims, SpatialGraph spatial, Scaler scaler, uint64_t init_seed)
    : config_(std::move(config)), dims_(dims), spatial_(std::move(spatial)), temporal_(dims.input_steps),
      scaler_(scaler) {
  config_.Validate();
  if (dims_.input_steps < 1 || dims_.output_steps < 1 || dims_.features < 1 || dims_.output_features < 1) {
    throw ShapeError("model: dimensions must be positive");
  }
  if (dims_.num_nodes != spatial_.num_nodes()) throw ShapeError("model: num_nodes differs from the spatial graph");
  if (!(scaler_.std > 0.0)) throw ValueError("model: scaler std must be > 0");
  std::mt19937_64 rng(init_seed);
  InitEncoderParams(params_, config_, encoder_shape(), rng);
  InitScorerParams(params_, kSpatialScorer, config_.spatial_dim, rng);
  InitScorerParams(params_, kTemporalScorer, config_.temporal_dim, rng);
  InitPredictorParams(params_, config_, predictor_shape(), rng);
}

ForwardResult Forward(Tape& t, Model& model, const STWindow& window, const ForwardOptions& opts) {
  const ModelConfig& cfg = model.config();
  const ModelDims& dims = model.dims();
  if (window.features.dim0 != dims.input_steps || window.features.dim1 != dims.num_nodes ||
      window.features.dim2 != dims.features) {
    throw ShapeError("forward: window features must be (L, N, F) matching the model");
  }
  const bool train = opts.mode == Mode::kTrain;
  if (train && opts.rng == nullptr) throw ValueError("forward: training mode needs a generator");

  const EncoderShape eshape = model.encoder_shape();
  const EncoderVars ev = BindEncoder(t, model.params(), cfg);
  const PredictorVars pv = BindPredictor(t, model.params());
  const Var x = t.Constant(window.features.data);
  const Graph& full_s = model.spatial_graph().arcs();
  const Graph& full_t = model.temporal_graph().arcs();

  ForwardResult r;
  r.kl_spatial = ZeroScalar(t);
  r.kl_temporal = ZeroScalar(t);
  Var h;

  const Ablation& ab = cfg.ablation;
  const bool random_drop = ab.random_drop_p.has_value();
  const bool spatial_ib = !ab.no_spatial_ib && !random_drop;
  const bool temporal_ib = !ab.no_temporal_ib && !random_drop;

  if (opts.hard_structure) {
    const Graph& gs = opts.spatial_structure ? *opts.spatial_structure : full_s;
    const Graph& gt = opts.temporal_structure ? *opts.temporal_structure : full_t;
    h = Encode(t, ev, cfg, x, eshape, gs, gt).h;
  } else if (random_drop) {
    const double p = *ab.random_drop_p;
    if (train && p > 0.0) {
      const Graph gs = full_s.Subgraph(DropMask(full_s.num_edges(), p, *opts.rng));
      const Graph gt = full_t.Subgraph(DropMask(full_t.num_edges(), p, *opts.rng));
      h = Encode(t, ev, cfg, x, eshape, gs, gt).h;
    } else {
      h = Encode(t, ev, cfg, x, eshape, full_s, full_t).h;
    }
  } else if (!spatial_ib && !temporal_ib) {
    h = Encode(t, ev, cfg, x, eshape, full_s, full_t).h;
  } else {
    const Encoded first = Encode(t, ev, cfg, x, eshape, full_s, full_t);
    std::mt19937_64* rng = train ? opts.rng : nullptr;
    std::optional<Var> ws, wt;
    if (spatial_ib) {
      const ScorerVars sv = BindScorer(t, model.params(), kSpatialScorer);
      Var logits = ScoreEdges(t, sv, first.hs, full_s);
      Var p = FloorProbs(t, SampleKeepProbs(t, logits, cfg.tau, opts.mode, cfg.noise, rng));
      r.spatial_probs = p;
      r.kl_spatial = BernoulliKl(t, p, opts.spatial_prior);
      ws = SelectSoft(p);
    }
    if (temporal_ib) {
      const ScorerVars sv = BindScorer(t, model.params(), kTemporalScorer);
      Var logits = ScoreEdges(t, sv, first.ht, full_t);
      Var p = FloorProbs(t, SampleKeepProbs(t, logits, cfg.tau, opts.mode, cfg.noise, rng));
      r.temporal_probs = p;
      r.kl_temporal = BernoulliKl(t, p, opts.temporal_prior);
      wt = SelectSoft(p);
    }
    h = Encode(t, ev, cfg, x, eshape, full_s, full_t, ws, wt).h;
  }

  Var normalized = Predict(t, pv, h, x, window.tod_index, window.dow_index, model.predictor_shape());
  r.prediction = ad::Affine(t, normalized, model.scaler().std, model.scaler().mean);
  return r;
}

Tensor3 PredictTensor(Model& model, const STWindow& window, const ForwardOptions& opts) {
  Tape t;
  const ForwardResult r = Forward(t, model, window, opts);
  const ModelDims& d = model.dims();
  return Tensor3(d.output_steps, d.num_nodes, d.output_features, t.value(r.prediction));
}

DistillResult Distill(Model& model, const STWindow& window, double spatial_prior, double temporal_prior) {
  ForwardOptions opts;
  opts.mode = Mode::kEval;
  opts.spatial_prior = spatial_prior;
  opts.temporal_prior = temporal_prior;
  Tape t;
  const ForwardResult r = Forward(t, model, window, opts);
  auto to_vec = [&](const std::optional<Var>& v, int n) {
    if (!v) return std::vector<double>(n, 1.0);
    const Matrix& m = t.value(*v);
    return std::vector<double>(m.data(), m.data() + m.size());
  };
  DistillResult out;
  out.spatial_probs = to_vec(r.spatial_probs, model.spatial_graph().arcs().num_edges());
  out.temporal_probs = to_vec(r.temporal_probs, model.temporal_graph().arcs().num_edges());
  out.spatial_selector = out.spatial_probs;
  out.temporal_selector = out.temporal_probs;
  out.kl_spatial = t.scalar(r.kl_spatial);
  out.kl_temporal = t.scalar(r.kl_temporal);
  return out;
}

void WriteProbabilityCsv(std::ostream& os, const Model& model, const DistillResult& result) {
  const auto& se = model.spatial_graph().edges();
  const auto& te = model.temporal_graph().arcs().edges();
  if (result.spatial_probs.size() != se.size() || result.temporal_probs.size() != te.size()) {
    throw ShapeError("probability export: result does not match the model graphs");
  }
  os << "graph_kind,v,u,prob\n";
  const auto old_precision = os.precision(17);
  for (size_t e = 0; e < se.size(); ++e) os << "spatial," << se[e].src << ',' << se[e].dst << ',' << result.spatial_probs[e] << '\n';
  for (size_t e = 0; e < te.size(); ++e) os << "temporal," << te[e].src << ',' << te[e].dst << ',' << result.temporal_probs[e] << '\n';
  os.precision(old_precision);
}

}  // namespace stgib
