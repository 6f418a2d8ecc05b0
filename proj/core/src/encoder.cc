#include "stgib/encoder.h"

#include <cmath>
#include <memory>
#include <string>

#include "stgib/errors.h"
#include "stgib/init.h"

namespace stgib {
namespace {

std::string GatName(const char* kind, int layer, const char* field) {
  return std::string("encoder.") + kind + "_gat." + std::to_string(layer) + "." + field;
}

void AddGatParams(ParamSet& params, const char* kind, int layers, int heads, int dim, std::mt19937_64& rng) {
  // Heads are summed, so each head starts at 1/sqrt(K) of the usual scale.
  const double gain = 1.0 / std::sqrt(static_cast<double>(heads));
  for (int l = 0; l < layers; ++l) {
    params.Add(GatName(kind, l, "W"), {heads, dim, dim}, GlorotUniform(heads * dim, dim, dim, dim, rng, gain));
    params.Add(GatName(kind, l, "a"), {heads, 2 * dim}, GlorotUniform(heads, 2 * dim, 2 * dim, 1, rng));
  }
}

double Leaky(double x) { return x > 0.0 ? x : kLeakySlope * x; }

// Forward state kept for the backward pass of one attention layer.
struct GatCache {
  int heads = 0;
  int dim = 0;
  std::vector<Matrix> z;                 // per head, M x dim
  std::vector<Eigen::VectorXd> pre_self; // per head, M
  std::vector<Eigen::VectorXd> pre_nb;   // per head, E (CSR slot order)
  std::vector<Eigen::VectorXd> a_self;   // softmax output, self slot
  std::vector<Eigen::VectorXd> a_nb;     // softmax output, neighbor slots
  Eigen::VectorXd slot_weight;           // edge weight per CSR slot (1 when unweighted)
};

void GatForward(const Matrix& h, const Matrix& w, const Matrix& a, const Graph& g, const Eigen::VectorXd* weights,
                int heads, GatCache& c, Matrix* out) {
  const int m = g.num_nodes();
  const int dim = static_cast<int>(h.cols());
  if (h.rows() != m) throw ShapeError("GraphAttention: feature rows differ from graph node count");
  if (w.rows() != static_cast<Eigen::Index>(heads) * dim || w.cols() != dim) {
    throw ShapeError("GraphAttention: head weights must be (K*dim) x dim");
  }
  if (a.rows() != heads || a.cols() != 2 * dim) throw ShapeError("GraphAttention: attention vectors must be K x 2*dim");
  const auto& off = g.in_offsets();
  const auto& src = g.in_sources();
  const auto& eid = g.in_edge_ids();
  const int slots = g.num_edges();

  c.heads = heads;
  c.dim = dim;
  c.slot_weight = Eigen::VectorXd::Ones(slots);
  if (weights != nullptr) {
    if (weights->size() != slots) throw ShapeError("GraphAttention: edge weights must have one entry per edge");
    for (int s = 0; s < slots; ++s) {
      const double v = (*weights)(eid[s]);
      if (!(v > 0.0 && v <= 1.0)) throw ValueError("GraphAttention: edge weight outside (0, 1]");
      c.slot_weight(s) = v;
    }
  }
  c.z.resize(heads);
  c.pre_self.assign(heads, Eigen::VectorXd(m));
  c.pre_nb.assign(heads, Eigen::VectorXd(slots));
  c.a_self.assign(heads, Eigen::VectorXd(m));
  c.a_nb.assign(heads, Eigen::VectorXd(slots));
  if (out != nullptr) *out = Matrix::Zero(m, dim);

  for (int k = 0; k < heads; ++k) {
    c.z[k] = h * w.middleRows(static_cast<Eigen::Index>(k) * dim, dim);
    const Matrix& z = c.z[k];
    const Eigen::VectorXd el = z * a.row(k).head(dim).transpose();
    const Eigen::VectorXd er = z * a.row(k).tail(dim).transpose();
    for (int j = 0; j < m; ++j) {
      const double self = Leaky(el(j) + er(j));
      c.pre_self[k](j) = el(j) + er(j);
      double mx = self;
      for (int s = off[j]; s < off[j + 1]; ++s) {
        c.pre_nb[k](s) = el(j) + er(src[s]);
        mx = std::max(mx, Leaky(c.pre_nb[k](s)));
      }
      double denom = std::exp(self - mx);
      for (int s = off[j]; s < off[j + 1]; ++s) denom += std::exp(Leaky(c.pre_nb[k](s)) - mx);
      c.a_self[k](j) = std::exp(self - mx) / denom;
      for (int s = off[j]; s < off[j + 1]; ++s) c.a_nb[k](s) = std::exp(Leaky(c.pre_nb[k](s)) - mx) / denom;
      if (out != nullptr) {
        out->row(j) += c.a_self[k](j) * z.row(j);
        for (int s = off[j]; s < off[j + 1]; ++s) out->row(j) += c.a_nb[k](s) * c.slot_weight(s) * z.row(src[s]);
      }
    }
  }
}

}  // namespace

void InitEncoderParams(ParamSet& params, const ModelConfig& cfg, const EncoderShape& shape,
                       std::mt19937_64& rng) {
  const int L = shape.input_steps, N = shape.num_nodes, F = shape.features;
  const int d = cfg.embed_dim, ds = cfg.spatial_dim, dt = cfg.temporal_dim;
  params.Add("encoder.W0", {F, d}, GlorotUniform(F, d, F, d, rng));
  params.Add("encoder.b0", {d}, Matrix::Zero(1, d));
  params.Add("encoder.Ws", {L, d, ds}, GlorotUniform(L * d, ds, L * d, ds, rng));
  params.Add("encoder.bs", {ds}, Matrix::Zero(1, ds));
  AddGatParams(params, "spatial", cfg.gat_layers, cfg.heads, ds, rng);
  params.Add("encoder.W1", {L, d, ds}, GlorotUniform(L * d, ds, ds, d, rng));
  params.Add("encoder.B1", {L, d}, Matrix::Zero(1, L * d));
  params.Add("encoder.Wt", {N, d, dt}, GlorotUniform(N * d, dt, N * d, dt, rng));
  params.Add("encoder.bt", {dt}, Matrix::Zero(1, dt));
  AddGatParams(params, "temporal", cfg.gat_layers, cfg.heads, dt, rng);
  params.Add("encoder.W2", {N, d, dt}, GlorotUniform(N * d, dt, dt, d, rng));
  params.Add("encoder.B2", {N, d}, Matrix::Zero(1, N * d));
}

EncoderVars BindEncoder(Tape& tape, ParamSet& params, const ModelConfig& cfg) {
  EncoderVars v;
  v.W0 = tape.Bind(params.at("encoder.W0"));
  v.b0 = tape.Bind(params.at("encoder.b0"));
  v.Ws = tape.Bind(params.at("encoder.Ws"));
  v.bs = tape.Bind(params.at("encoder.bs"));
  for (int l = 0; l < cfg.gat_layers; ++l) {
    v.spatial_gat.push_back({tape.Bind(params.at(GatName("spatial", l, "W"))),
                             tape.Bind(params.at(GatName("spatial", l, "a")))});
  }
  v.W1 = tape.Bind(params.at("encoder.W1"));
  v.B1 = tape.Bind(params.at("encoder.B1"));
  v.Wt = tape.Bind(params.at("encoder.Wt"));
  v.bt = tape.Bind(params.at("encoder.bt"));
  for (int l = 0; l < cfg.gat_layers; ++l) {
    v.temporal_gat.push_back({tape.Bind(params.at(GatName("temporal", l, "W"))),
                              tape.Bind(params.at(GatName("temporal", l, "a")))});
  }
  v.W2 = tape.Bind(params.at("encoder.W2"));
  v.B2 = tape.Bind(params.at("encoder.B2"));
  return v;
}

Var EmbedFeatures(Tape& t, const EncoderVars& p, Var x) {
  if (t.value(x).cols() != t.value(p.W0).rows()) throw ShapeError("embed_features: F differs from W0 rows");
  return ad::AddRow(t, ad::MatMul(t, x, p.W0), p.b0);
}

Var ProjectSpatial(Tape& t, const EncoderVars& p, Var x0, const EncoderShape& shape) {
  const int L = shape.input_steps, N = shape.num_nodes;
  const Matrix& xv = t.value(x0);
  if (xv.rows() != static_cast<Eigen::Index>(L) * N) throw ShapeError("project_spatial: input must be (L*N) x d");
  const int d = static_cast<int>(xv.cols());
  if (t.value(p.Ws).rows() != static_cast<Eigen::Index>(L) * d) throw ShapeError("project_spatial: Ws must be (L*d) x d_s");
  Var by_node = ad::Reshape(t, ad::SwapAxes01(t, x0, L, N), N, L * d);
  return ad::AddRow(t, ad::MatMul(t, by_node, p.Ws), p.bs);
}

Var GraphAttention(Tape& t, Var h, const GatVars& gat, const Graph& graph, std::optional<Var> edge_weights,
                   int heads) {
  auto cache = std::make_shared<GatCache>();
  Eigen::VectorXd weights;
  if (edge_weights) {
    const Matrix& wv = t.value(*edge_weights);
    if (wv.cols() != 1) throw ShapeError("GraphAttention: edge weights must be E x 1");
    weights = Eigen::Map<const Eigen::VectorXd>(wv.data(), wv.rows());
  }
  Matrix out;
  GatForward(t.value(h), t.value(gat.W), t.value(gat.a), graph, edge_weights ? &weights : nullptr, heads, *cache,
             &out);

  std::vector<Var> inputs = {h, gat.W, gat.a};
  if (edge_weights) inputs.push_back(*edge_weights);
  auto g = std::make_shared<const Graph>(graph);
  return t.Record(std::move(out), inputs, [=](Tape& tp, Var self) {
    const Matrix& grad = tp.grad_ref(self);
    const Matrix& hv = tp.value(h);
    const Matrix& wv = tp.value(gat.W);
    const Matrix& av = tp.value(gat.a);
    const int m = g->num_nodes();
    const int dim = cache->dim;
    const auto& off = g->in_offsets();
    const auto& src = g->in_sources();
    const auto& eid = g->in_edge_ids();
    Matrix dh = Matrix::Zero(hv.rows(), hv.cols());
    Matrix dw = Matrix::Zero(wv.rows(), wv.cols());
    Matrix da = Matrix::Zero(av.rows(), av.cols());
    Matrix dweights = Matrix::Zero(g->num_edges(), 1);

    for (int k = 0; k < cache->heads; ++k) {
      const Matrix& z = cache->z[k];
      Matrix dz = Matrix::Zero(m, dim);
      Eigen::VectorXd del = Eigen::VectorXd::Zero(m);
      Eigen::VectorXd der = Eigen::VectorXd::Zero(m);
      for (int j = 0; j < m; ++j) {
        const auto gj = grad.row(j);
        const double as = cache->a_self[k](j);
        dz.row(j) += as * gj;
        const double d_as = gj.dot(z.row(j));
        double dot = as * d_as;
        // First sweep: gradients of the post-softmax coefficients.
        thread_local std::vector<double> d_anb;
        d_anb.assign(off[j + 1] - off[j], 0.0);
        for (int s = off[j]; s < off[j + 1]; ++s) {
          const double an = cache->a_nb[k](s);
          const double wgt = cache->slot_weight(s);
          dz.row(src[s]) += an * wgt * gj;
          const double dc = gj.dot(z.row(src[s]));
          dweights(eid[s], 0) += an * dc;
          d_anb[s - off[j]] = dc * wgt;
          dot += an * dc * wgt;
        }
        // Softmax and LeakyReLU backward.
        const double pre_s = cache->pre_self[k](j);
        const double de_self = as * (d_as - dot) * (pre_s > 0.0 ? 1.0 : kLeakySlope);
        del(j) += de_self;
        der(j) += de_self;
        for (int s = off[j]; s < off[j + 1]; ++s) {
          const double pre = cache->pre_nb[k](s);
          const double de = cache->a_nb[k](s) * (d_anb[s - off[j]] - dot) * (pre > 0.0 ? 1.0 : kLeakySlope);
          del(j) += de;
          der(src[s]) += de;
        }
      }
      const auto a_left = av.row(k).head(dim);
      const auto a_right = av.row(k).tail(dim);
      dz.noalias() += del * a_left;
      dz.noalias() += der * a_right;
      da.row(k).head(dim) += (z.transpose() * del).transpose();
      da.row(k).tail(dim) += (z.transpose() * der).transpose();
      const auto wk = wv.middleRows(static_cast<Eigen::Index>(k) * dim, dim);
      dw.middleRows(static_cast<Eigen::Index>(k) * dim, dim).noalias() += hv.transpose() * dz;
      dh.noalias() += dz * wk.transpose();
    }
    tp.AccumulateGrad(h, dh);
    tp.AccumulateGrad(gat.W, dw);
    tp.AccumulateGrad(gat.a, da);
    if (edge_weights) tp.AccumulateGrad(*edge_weights, dweights);
  });
}

std::vector<Matrix> AttentionCoefficients(const Matrix& h, const Matrix& w, const Matrix& a, const Graph& graph,
                                          int heads) {
  GatCache cache;
  GatForward(h, w, a, graph, nullptr, heads, cache, nullptr);
  const int m = graph.num_nodes();
  const auto& off = graph.in_offsets();
  const auto& src = graph.in_sources();
  std::vector<Matrix> out(heads, Matrix::Zero(m, m));
  for (int k = 0; k < heads; ++k) {
    for (int j = 0; j < m; ++j) {
      out[k](j, j) = cache.a_self[k](j);
      for (int s = off[j]; s < off[j + 1]; ++s) out[k](j, src[s]) = cache.a_nb[k](s);
    }
  }
  return out;
}

Var ExpandSpatial(Tape& t, const EncoderVars& p, Var hs, const EncoderShape& shape) {
  const int L = shape.input_steps, N = shape.num_nodes;
  if (t.value(hs).rows() != N) throw ShapeError("expand_spatial: input must be N x d_s");
  const int d = static_cast<int>(t.value(p.W1).rows()) / L;
  Var by_node = ad::AddRow(t, ad::MatMulTransB(t, hs, p.W1), p.B1);  // N x (L*d)
  return ad::SwapAxes01(t, ad::Reshape(t, by_node, N * L, d), N, L);
}

Var ProjectTemporal(Tape& t, const EncoderVars& p, Var hps, const EncoderShape& shape) {
  const int L = shape.input_steps, N = shape.num_nodes;
  const Matrix& hv = t.value(hps);
  if (hv.rows() != static_cast<Eigen::Index>(L) * N) throw ShapeError("project_temporal: input must be (L*N) x d");
  const int d = static_cast<int>(hv.cols());
  if (t.value(p.Wt).rows() != static_cast<Eigen::Index>(N) * d) throw ShapeError("project_temporal: Wt must be (N*d) x d_t");
  return ad::AddRow(t, ad::MatMul(t, ad::Reshape(t, hps, L, N * d), p.Wt), p.bt);
}

Var ExpandTemporal(Tape& t, const EncoderVars& p, Var ht, const EncoderShape& shape) {
  const int L = shape.input_steps, N = shape.num_nodes;
  if (t.value(ht).rows() != L) throw ShapeError("expand_temporal: input must be L x d_t");
  const int d = static_cast<int>(t.value(p.W2).rows()) / N;
  Var by_step = ad::AddRow(t, ad::MatMulTransB(t, ht, p.W2), p.B2);  // L x (N*d)
  return ad::Reshape(t, by_step, L * N, d);
}

Encoded Encode(Tape& t, const EncoderVars& p, const ModelConfig& cfg, Var x, const EncoderShape& shape,
               const Graph& spatial, const Graph& temporal, std::optional<Var> spatial_weights,
               std::optional<Var> temporal_weights) {
  if (spatial.num_nodes() != shape.num_nodes) throw ShapeError("encode: spatial graph size differs from N");
  if (temporal.num_nodes() != shape.input_steps) throw ShapeError("encode: temporal graph size differs from L");
  Var x0 = EmbedFeatures(t, p, x);
  Var hs = ProjectSpatial(t, p, x0, shape);
  for (size_t l = 0; l < p.spatial_gat.size(); ++l) {
    if (l > 0) hs = ad::Elu(t, hs);
    hs = GraphAttention(t, hs, p.spatial_gat[l], spatial, spatial_weights, cfg.heads);
  }
  Var hps = ExpandSpatial(t, p, hs, shape);
  Var ht = ProjectTemporal(t, p, hps, shape);
  for (size_t l = 0; l < p.temporal_gat.size(); ++l) {
    if (l > 0) ht = ad::Elu(t, ht);
    ht = GraphAttention(t, ht, p.temporal_gat[l], temporal, temporal_weights, cfg.heads);
  }
  Var h = ExpandTemporal(t, p, ht, shape);
  return {h, hs, ht};
}

}  // namespace stgib
