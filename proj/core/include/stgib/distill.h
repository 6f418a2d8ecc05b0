#ifndef STGIB_DISTILL_H_
#define STGIB_DISTILL_H_

#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stgib/tape.h"
#include "stgib/types.h"

namespace stgib {

enum class Mode { kTrain, kEval };

inline constexpr double kKlClamp = 1e-7;

// Two-layer edge MLP: [h_v || h_u] (2*dim) -> ELU(2*dim) -> 1.
struct ScorerVars {
  Var W1, b1, W2, b2;
};

void InitScorerParams(ParamSet& params, const std::string& prefix, int dim, std::mt19937_64& rng);
ScorerVars BindScorer(Tape& tape, ParamSet& params, const std::string& prefix);

// One logit per edge of `graph` (E x 1), from the concatenated endpoint
// embeddings [h_src || h_dst].
Var ScoreEdges(Tape& t, const ScorerVars& s, Var node_embeds, const Graph& graph);

// Draws the per-edge noise added to logits in training mode.
//   kGumbel:   g = -log(-log U)
//   kLogistic: g = log U - log(1 - U)
Matrix DrawEdgeNoise(int num_edges, NoiseKind kind, std::mt19937_64& rng);

// p = sigmoid((logit + g) / tau); g is drawn from `rng` in training mode and
// omitted in eval mode (rng may then be null).
Var SampleKeepProbs(Tape& t, Var logits, double tau, Mode mode, NoiseKind noise, std::mt19937_64* rng);

// Soft selector used in every forward pass: alpha = p.
inline Var SelectSoft(Var probs) { return probs; }

// Diagnostic hard selector: edge e kept iff U_e < p_e.
std::vector<bool> SampleHardSelector(std::span<const double> probs, std::mt19937_64& rng);

// log prod_e Bern(alpha_e | p_e).
double SelectorLogProb(const std::vector<bool>& selector, std::span<const double> probs);

// sum_e p log(p/r) + (1-p) log((1-p)/(1-r)), with p clamped to
// [kKlClamp, 1 - kKlClamp]. Throws ValueError unless 0 < r < 1.
double BernoulliKl(std::span<const double> probs, double r);
Var BernoulliKl(Tape& t, Var probs, double r);

double PriorValue(const PriorSchedule& schedule, int epoch);

// Linear anneal min(1, epoch / anneal_epochs) scaled by the configured maxima.
std::pair<double, double> LambdaValue(int epoch, int anneal_epochs, double lambda1_max = 1.0,
                                      double lambda2_max = 1.0);

}  // namespace stgib

#endif  // STGIB_DISTILL_H_
