#ifndef STGIB_PREDICTOR_H_
#define STGIB_PREDICTOR_H_

#include <random>
#include <vector>

#include "stgib/tape.h"
#include "stgib/types.h"

namespace stgib {

struct PredictorShape {
  int input_steps = 0;      // L
  int num_nodes = 0;        // N
  int features = 0;         // F
  int output_steps = 0;     // L'
  int output_features = 0;  // F'
};

struct PredictorVars {
  Var region;          // N x d
  Var tod;             // steps_per_day x d
  Var dow;             // 7 x d
  Var lift_W, lift_b;  // F -> d_x
  Var head_W1, head_b1;  // L*(4d + d_x) -> hidden
  Var head_W2, head_b2;  // hidden -> L'*F'
};

void InitPredictorParams(ParamSet& params, const ModelConfig& cfg, const PredictorShape& shape,
                         std::mt19937_64& rng);
PredictorVars BindPredictor(Tape& tape, ParamSet& params);

struct TemporalPositions {
  Var tod;  // L x d
  Var dow;  // L x d
};

// Row gathers from the time-of-day and day-of-week tables; IndexError on
// out-of-range indices.
TemporalPositions LookupPositions(Tape& t, const PredictorVars& p, const std::vector<int>& tod_index,
                                  const std::vector<int>& dow_index);

// Per node j the fused row for step i is
//   [H[i,j] || E_region[j] || E_tod[i] || E_dow[i] || X[i,j] W_lift + b_lift];
// the L rows are flattened into one vector, and a two-layer ELU MLP regresses
// L'*F' outputs. Returns (L'*N) x F'.
Var Predict(Tape& t, const PredictorVars& p, Var h, Var x, const std::vector<int>& tod_index,
            const std::vector<int>& dow_index, const PredictorShape& shape);

}  // namespace stgib

#endif  // STGIB_PREDICTOR_H_
