#ifndef STGIB_MODEL_H_
#define STGIB_MODEL_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stgib/distill.h"
#include "stgib/encoder.h"
#include "stgib/predictor.h"
#include "stgib/tape.h"
#include "stgib/types.h"

namespace stgib {

struct ModelDims {
  int input_steps = 12;     // L
  int output_steps = 12;    // L'
  int num_nodes = 0;        // N
  int features = 1;         // F
  int output_features = 1;  // F'

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Owns parameters, graphs and the normalization used to map predictions back
// to raw units.
class Model {
 public:
  Model(ModelConfig config, ModelDims dims, SpatialGraph spatial, Scaler scaler, uint64_t init_seed);

  const ModelConfig& config() const { return config_; }
  ModelConfig& mutable_config() { return config_; }
  const ModelDims& dims() const { return dims_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  const SpatialGraph& spatial_graph() const { return spatial_; }
  const TemporalGraph& temporal_graph() const { return temporal_; }
  const Scaler& scaler() const { return scaler_; }

  EncoderShape encoder_shape() const { return {dims_.input_steps, dims_.num_nodes, dims_.features}; }
  PredictorShape predictor_shape() const {
    return {dims_.input_steps, dims_.num_nodes, dims_.features, dims_.output_steps, dims_.output_features};
  }

 private:
  ModelConfig config_;
  ModelDims dims_;
  SpatialGraph spatial_;
  TemporalGraph temporal_;
  Scaler scaler_;
  ParamSet params_;
};

struct ForwardOptions {
  Mode mode = Mode::kEval;
  double spatial_prior = 0.5;
  double temporal_prior = 0.5;
  // Noise source for training mode (Gumbel noise, random-drop masks).
  std::mt19937_64* rng = nullptr;
  // When set, the model runs a single encode pass on these exact structures
  // with unit edge weights and no distillation. An unset side keeps its
  // full graph.
  bool hard_structure = false;
  std::optional<Graph> spatial_structure;
  std::optional<Graph> temporal_structure;
};

struct ForwardResult {
  Var prediction;  // (L'*N) x F', raw units
  Var kl_spatial;  // 1 x 1, zero constant when the term is disabled
  Var kl_temporal;
  std::optional<Var> spatial_probs;   // E_s x 1
  std::optional<Var> temporal_probs;  // E_t x 1
};

ForwardResult Forward(Tape& t, Model& model, const STWindow& window, const ForwardOptions& opts);

// Prediction as a (L', N, F') tensor in raw units.
Tensor3 PredictTensor(Model& model, const STWindow& window, const ForwardOptions& opts = {});

// Eval-mode edge probabilities, selectors and KL terms. Disabled branches
// report unit probabilities and zero KL.
DistillResult Distill(Model& model, const STWindow& window, double spatial_prior = 0.5,
                      double temporal_prior = 0.5);

// CSV with header graph_kind,v,u,prob; one row per spatial and temporal arc.
void WriteProbabilityCsv(std::ostream& os, const Model& model, const DistillResult& result);

}  // namespace stgib

#endif  // STGIB_MODEL_H_
