#include "stgib/distill.h"

#include <algorithm>
#include <cmath>

#include "stgib/errors.h"
#include "stgib/init.h"

namespace stgib {

void InitScorerParams(ParamSet& params, const std::string& prefix, int dim, std::mt19937_64& rng) {
  const int in = 2 * dim;
  params.Add(prefix + ".W1", {in, in}, GlorotUniform(in, in, in, in, rng));
  params.Add(prefix + ".b1", {in}, Matrix::Zero(1, in));
  params.Add(prefix + ".W2", {in, 1}, GlorotUniform(in, 1, in, 1, rng));
  params.Add(prefix + ".b2", {1}, Matrix::Zero(1, 1));
}

ScorerVars BindScorer(Tape& tape, ParamSet& params, const std::string& prefix) {
  return {tape.Bind(params.at(prefix + ".W1")), tape.Bind(params.at(prefix + ".b1")),
          tape.Bind(params.at(prefix + ".W2")), tape.Bind(params.at(prefix + ".b2"))};
}

Var ScoreEdges(Tape& t, const ScorerVars& s, Var node_embeds, const Graph& graph) {
  const int rows = static_cast<int>(t.value(node_embeds).rows());
  std::vector<int> src, dst;
  src.reserve(graph.num_edges());
  dst.reserve(graph.num_edges());
  for (const Edge& e : graph.edges()) {
    if (e.src >= rows || e.dst >= rows) throw IndexError("score_edges: edge endpoint has no embedding");
    src.push_back(e.src);
    dst.push_back(e.dst);
  }
  const Var parts[] = {ad::GatherRows(t, node_embeds, std::move(src)), ad::GatherRows(t, node_embeds, std::move(dst))};
  Var pair = ad::ConcatCols(t, parts);
  Var hidden = ad::Elu(t, ad::AddRow(t, ad::MatMul(t, pair, s.W1), s.b1));
  return ad::AddRow(t, ad::MatMul(t, hidden, s.W2), s.b2);
}

Matrix DrawEdgeNoise(int num_edges, NoiseKind kind, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix g(num_edges, 1);
  for (int e = 0; e < num_edges; ++e) {
    double u = unif(rng);
    while (u <= 0.0) u = unif(rng);
    g(e, 0) = kind == NoiseKind::kGumbel ? -std::log(-std::log(u)) : std::log(u) - std::log1p(-u);
  }
  return g;
}

Var SampleKeepProbs(Tape& t, Var logits, double tau, Mode mode, NoiseKind noise, std::mt19937_64* rng) {
  if (!(tau > 0.0)) throw ValueError("sample_keep_probs: tau must be > 0");
  Var z = logits;
  if (mode == Mode::kTrain) {
    if (rng == nullptr) throw ValueError("sample_keep_probs: training mode needs a generator");
    z = ad::AddConstant(t, logits, DrawEdgeNoise(static_cast<int>(t.value(logits).rows()), noise, *rng));
  }
  return ad::Sigmoid(t, ad::Scale(t, z, 1.0 / tau));
}

std::vector<bool> SampleHardSelector(std::span<const double> probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<bool> keep(probs.size());
  for (size_t e = 0; e < probs.size(); ++e) keep[e] = unif(rng) < probs[e];
  return keep;
}

double SelectorLogProb(const std::vector<bool>& selector, std::span<const double> probs) {
  if (selector.size() != probs.size()) throw ShapeError("selector and probabilities differ in length");
  double lp = 0.0;
  for (size_t e = 0; e < probs.size(); ++e) lp += std::log(selector[e] ? probs[e] : 1.0 - probs[e]);
  return lp;
}

namespace {

void CheckPrior(double r) {
  if (!(r > 0.0 && r < 1.0)) throw ValueError("bernoulli_kl: prior r must be in (0, 1)");
}

double ClampProb(double p) { return std::clamp(p, kKlClamp, 1.0 - kKlClamp); }

}  // namespace

double BernoulliKl(std::span<const double> probs, double r) {
  CheckPrior(r);
  double kl = 0.0;
  for (double raw : probs) {
    const double p = ClampProb(raw);
    kl += p * std::log(p / r) + (1.0 - p) * std::log((1.0 - p) / (1.0 - r));
  }
  return kl;
}

Var BernoulliKl(Tape& t, Var probs, double r) {
  const Matrix& pv = t.value(probs);
  Matrix out(1, 1);
  out(0, 0) = BernoulliKl(std::span<const double>(pv.data(), static_cast<size_t>(pv.size())), r);
  return t.Record(std::move(out), {probs}, [probs, r](Tape& tp, Var self) {
    const Matrix& p = tp.value(probs);
    const double g = tp.grad_ref(self)(0, 0);
    Matrix d(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double raw = p.data()[i];
      // The clamp is flat outside its range.
      if (raw < kKlClamp || raw > 1.0 - kKlClamp) {
        d.data()[i] = 0.0;
        continue;
      }
      d.data()[i] = g * (std::log(raw / r) - std::log((1.0 - raw) / (1.0 - r)));
    }
    tp.AccumulateGrad(probs, d);
  });
}

double PriorValue(const PriorSchedule& schedule, int epoch) {
  if (epoch < 0) throw ValueError("prior_value: epoch must be >= 0");
  const int steps = epoch / schedule.decay_interval_epochs;
  // Rounded to 12 decimals so that 0.9 - 0.1 * 2 reads back as 0.7.
  const double r = std::round((schedule.r_start - schedule.decay_amount * steps) * 1e12) / 1e12;
  return std::max(schedule.r_floor, r);
}

std::pair<double, double> LambdaValue(int epoch, int anneal_epochs, double lambda1_max, double lambda2_max) {
  const double frac = anneal_epochs <= 0 ? 1.0 : std::min(1.0, static_cast<double>(epoch) / anneal_epochs);
  return {frac * lambda1_max, frac * lambda2_max};
}

}  // namespace stgib
