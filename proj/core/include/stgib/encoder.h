#ifndef STGIB_ENCODER_H_
#define STGIB_ENCODER_H_

#include <optional>
#include <random>
#include <vector>

#include "stgib/tape.h"
#include "stgib/types.h"

namespace stgib {

inline constexpr double kLeakySlope = 0.2;

// Parameters of one K-head attention layer over `dim`-wide node features.
//   W: logical (K, dim, dim), the per-head maps z = x * W_k.
//   a: logical (K, 2*dim), attention vector over [z_target || z_source].
struct GatVars {
  Var W;
  Var a;
};

struct EncoderVars {
  Var W0, b0;  // (F, d), (d)
  Var Ws, bs;  // (L, d, d_s), (d_s)
  std::vector<GatVars> spatial_gat;
  Var W1, B1;  // (L, d, d_s), (L, d)
  Var Wt, bt;  // (N, d, d_t), (d_t)
  std::vector<GatVars> temporal_gat;
  Var W2, B2;  // (N, d, d_t), (N, d)
};

struct EncoderShape {
  int input_steps = 0;  // L
  int num_nodes = 0;    // N
  int features = 0;     // F
};

void InitEncoderParams(ParamSet& params, const ModelConfig& cfg, const EncoderShape& shape, std::mt19937_64& rng);
EncoderVars BindEncoder(Tape& tape, ParamSet& params, const ModelConfig& cfg);

// X: (L*N) x F  ->  X0: (L*N) x d, X0 = X W0 + b0.
Var EmbedFeatures(Tape& t, const EncoderVars& p, Var x);

// X0: (L*N) x d  ->  Xs: N x d_s, Xs[j] = sum_i X0[i, j] Ws[i] + bs.
Var ProjectSpatial(Tape& t, const EncoderVars& p, Var x0, const EncoderShape& shape);

// K-head graph attention with heads summed:
//   h_j = sum_k sum_{j' in N(j) + {j}} alpha^k_{j,j'} * (x_{j'} W_k)
//   alpha^k_{j,.} = softmax_{j'}(LeakyReLU(a_k . [x_j W_k || x_{j'} W_k]))
// N(j) are the in-neighbors of j. When `edge_weights` (E x 1, aligned with
// graph.edges(), each in (0, 1]) is given, every non-self coefficient is
// multiplied by its edge weight after the softmax; rows are not renormalized.
Var GraphAttention(Tape& t, Var h, const GatVars& gat, const Graph& graph, std::optional<Var> edge_weights,
                   int heads);

// Pre-mask attention coefficients as dense M x M matrices, one per head;
// entry (j, j') is alpha_{j, j'} and zero outside N(j) + {j}.
std::vector<Matrix> AttentionCoefficients(const Matrix& h, const Matrix& w, const Matrix& a, const Graph& graph,
                                          int heads);

// Hs: N x d_s  ->  (L*N) x d, H'[i, j] = W1[i] Hs[j] + B1[i].
Var ExpandSpatial(Tape& t, const EncoderVars& p, Var hs, const EncoderShape& shape);

// H': (L*N) x d  ->  Xt: L x d_t, Xt[i] = sum_j H'[i, j] Wt[j] + bt.
Var ProjectTemporal(Tape& t, const EncoderVars& p, Var hps, const EncoderShape& shape);

// Ht: L x d_t  ->  (L*N) x d, H[i, j] = W2[j] Ht[i] + B2[j].
Var ExpandTemporal(Tape& t, const EncoderVars& p, Var ht, const EncoderShape& shape);

struct Encoded {
  Var h;   // (L*N) x d
  Var hs;  // N x d_s, spatial embeddings after the attention stack
  Var ht;  // L x d_t, temporal embeddings after the attention stack
};

// Full pass: embed, spatial projection, attention stack (ELU between layers),
// expansion, temporal projection, attention stack, expansion.
Encoded Encode(Tape& t, const EncoderVars& p, const ModelConfig& cfg, Var x, const EncoderShape& shape,
               const Graph& spatial, const Graph& temporal, std::optional<Var> spatial_weights = std::nullopt,
               std::optional<Var> temporal_weights = std::nullopt);

}  // namespace stgib

#endif  // STGIB_ENCODER_H_
