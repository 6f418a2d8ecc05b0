#ifndef STGIB_TRAINER_H_
#define STGIB_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string_view>
#include <vector>

#include "stgib/model.h"
#include "stgib/serialize.h"

namespace stgib {

enum class LossKind { kHuber, kMse };

std::string_view LossKindName(LossKind kind);
LossKind ParseLossKind(std::string_view name);

struct TrainConfig {
  double learning_rate = 1e-3;
  double lr_decay_ratio = 0.5;
  int lr_patience = 10;  // epochs without val MAE improvement before decay
  int epochs = 100;
  int batch_size = 16;
  uint64_t seed = 0;
  LossKind loss = LossKind::kHuber;
  int lambda_anneal_epochs = 50;
  double grad_clip = 5.0;  // global norm; <= 0 disables
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int checkpoint_every = 0;  // 0 writes only the best checkpoint
  bool restore_best = true;  // reload best-val parameters after training

  void Validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void to_json(Json& j, const TrainConfig& c);
void from_json(const Json& j, TrainConfig& c);

struct Metrics {
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;  // percent, over entries with nonzero target
};

struct EpochReport {
  int epoch = 0;
  double train_loss = 0.0;  // mean joint objective over batches
  double task_loss = 0.0;
  Metrics val;
  double kl_spatial = 0.0;  // mean per window
  double kl_temporal = 0.0;
  double r_spatial = 0.0;
  double r_temporal = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double learning_rate = 0.0;
  double wall_time = 0.0;  // seconds

  // Equality ignores wall_time.
  bool SameOutcome(const EpochReport& o) const;
};

void to_json(Json& j, const EpochReport& r);

// Scalar losses on plain arrays.
double HuberLoss(const Matrix& y, const Matrix& y_hat, double delta);
double MseLoss(const Matrix& y, const Matrix& y_hat);
double TotalLoss(double task_loss, double kl_spatial, double kl_temporal, double lambda1, double lambda2);

// Differentiable versions; `y` is a constant target.
Var HuberLoss(Tape& t, Var y_hat, const Matrix& y, double delta);
Var MseLoss(Tape& t, Var y_hat, const Matrix& y);

struct BatchStats {
  double objective = 0.0;  // mean over windows
  double task_loss = 0.0;
  double kl_spatial = 0.0;
  double kl_temporal = 0.0;
};

struct StepSchedule {
  double r_spatial = 0.9;
  double r_temporal = 0.9;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

// Forward + backward over a batch. Parameter gradients (of the batch-mean
// objective) are added to the existing Param::grad buffers.
BatchStats AccumulateBatch(Model& model, const std::vector<const STWindow*>& batch, LossKind loss, double delta,
                           const StepSchedule& schedule, Mode mode, std::mt19937_64* rng);

class Adam {
 public:
  Adam(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void Step(ParamSet& params, double lr);

 private:
  double beta1_, beta2_, eps_;
  long step_ = 0;
  std::vector<Matrix> m_, v_;
};

// Scales all gradients so their global L2 norm is at most max_norm. Returns
// the norm before clipping.
double ClipGradNorm(ParamSet& params, double max_norm);

Metrics ComputeMetrics(const std::vector<Tensor3>& targets, const std::vector<Tensor3>& predictions);
// Eval-mode metrics in raw units over all horizon steps jointly.
Metrics Evaluate(Model& model, const std::vector<STWindow>& windows);

struct TrainOutputs {
  std::ostream* epoch_log = nullptr;    // one JSON record per epoch
  std::filesystem::path checkpoint_dir;  // empty disables checkpoints
};

struct TrainResult {
  std::vector<EpochReport> reports;
  int best_epoch = -1;
  double best_val_mae = 0.0;
};

// Joint training. Throws NumericError when the objective becomes non-finite.
TrainResult Train(Model& model, const std::vector<STWindow>& train, const std::vector<STWindow>& val,
                  const TrainConfig& config, const TrainOutputs& outputs = {});

}  // namespace stgib

#endif  // STGIB_TRAINER_H_
