#include "stgib/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <ostream>
#include <sstream>

#include "stgib/checkpoint.h"
#include "stgib/distill.h"
#include "stgib/errors.h"

namespace stgib {

std::string_view LossKindName(LossKind kind) { return kind == LossKind::kHuber ? "huber" : "mse"; }

LossKind ParseLossKind(std::string_view name) {
  if (name == "huber") return LossKind::kHuber;
  if (name == "mse") return LossKind::kMse;
  throw ConfigError("unknown loss kind '" + std::string(name) + "' (expected huber or mse)");
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
  if (!(lr_decay_ratio > 0.0 && lr_decay_ratio <= 1.0)) throw ConfigError("train.lr_decay_ratio must be in (0, 1]");
  if (lr_patience < 1) throw ConfigError("train.lr_patience must be >= 1");
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (lambda_anneal_epochs < 0) throw ConfigError("train.lambda_anneal_epochs must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("train.adam betas must be in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps must be > 0");
  if (checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be >= 0");
}

void to_json(Json& j, const TrainConfig& c) {
  j = Json{{"learning_rate", c.learning_rate},
           {"lr_decay_ratio", c.lr_decay_ratio},
           {"lr_patience", c.lr_patience},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"seed", c.seed},
           {"loss", LossKindName(c.loss)},
           {"lambda_anneal_epochs", c.lambda_anneal_epochs},
           {"grad_clip", c.grad_clip},
           {"adam_beta1", c.adam_beta1},
           {"adam_beta2", c.adam_beta2},
           {"adam_eps", c.adam_eps},
           {"checkpoint_every", c.checkpoint_every},
           {"restore_best", c.restore_best}};
}

void from_json(const Json& j, TrainConfig& c) {
  RejectUnknownKeys(j,
                    {"learning_rate", "lr_decay_ratio", "lr_patience", "epochs", "batch_size", "seed", "loss",
                     "lambda_anneal_epochs", "grad_clip", "adam_beta1", "adam_beta2", "adam_eps", "checkpoint_every",
                     "restore_best"},
                    "train");
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("learning_rate", c.learning_rate);
  get("lr_decay_ratio", c.lr_decay_ratio);
  get("lr_patience", c.lr_patience);
  get("epochs", c.epochs);
  get("batch_size", c.batch_size);
  get("seed", c.seed);
  if (j.contains("loss")) c.loss = ParseLossKind(j.at("loss").get<std::string>());
  get("lambda_anneal_epochs", c.lambda_anneal_epochs);
  get("grad_clip", c.grad_clip);
  get("adam_beta1", c.adam_beta1);
  get("adam_beta2", c.adam_beta2);
  get("adam_eps", c.adam_eps);
  get("checkpoint_every", c.checkpoint_every);
  get("restore_best", c.restore_best);
}

bool EpochReport::SameOutcome(const EpochReport& o) const {
  return epoch == o.epoch && train_loss == o.train_loss && task_loss == o.task_loss && val.mae == o.val.mae &&
         val.rmse == o.val.rmse && val.mape == o.val.mape && kl_spatial == o.kl_spatial &&
         kl_temporal == o.kl_temporal && r_spatial == o.r_spatial && r_temporal == o.r_temporal &&
         lambda1 == o.lambda1 && lambda2 == o.lambda2 && learning_rate == o.learning_rate;
}

void to_json(Json& j, const EpochReport& r) {
  j = Json{{"epoch", r.epoch},
           {"train_loss", r.train_loss},
           {"task_loss", r.task_loss},
           {"val_mae", r.val.mae},
           {"val_rmse", r.val.rmse},
           {"val_mape", r.val.mape},
           {"kl_spatial", r.kl_spatial},
           {"kl_temporal", r.kl_temporal},
           {"r_spatial", r.r_spatial},
           {"r_temporal", r.r_temporal},
           {"lambda1", r.lambda1},
           {"lambda2", r.lambda2},
           {"learning_rate", r.learning_rate},
           {"wall_time", r.wall_time}};
}

namespace {

void CheckSameShape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError(std::string(what) + ": shape mismatch");
}

double HuberTerm(double e, double delta) {
  const double a = std::abs(e);
  return a <= delta ? 0.5 * e * e : delta * (a - 0.5 * delta);
}

}  // namespace

double HuberLoss(const Matrix& y, const Matrix& y_hat, double delta) {
  CheckSameShape(y, y_hat, "huber_loss");
  if (!(delta > 0.0)) throw ValueError("huber_loss: delta must be > 0");
  double s = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) s += HuberTerm(y.data()[i] - y_hat.data()[i], delta);
  return y.size() == 0 ? 0.0 : s / static_cast<double>(y.size());
}

double MseLoss(const Matrix& y, const Matrix& y_hat) {
  CheckSameShape(y, y_hat, "mse_loss");
  return y.size() == 0 ? 0.0 : (y - y_hat).squaredNorm() / static_cast<double>(y.size());
}

double TotalLoss(double task_loss, double kl_spatial, double kl_temporal, double lambda1, double lambda2) {
  return task_loss + lambda1 * kl_spatial + lambda2 * kl_temporal;
}

Var HuberLoss(Tape& t, Var y_hat, const Matrix& y, double delta) {
  const Matrix& yh = t.value(y_hat);
  Matrix out(1, 1);
  out(0, 0) = HuberLoss(y, yh, delta);
  return t.Record(std::move(out), {y_hat}, [y_hat, y, delta](Tape& tp, Var self) {
    const Matrix& yh = tp.value(y_hat);
    const double g = tp.grad_ref(self)(0, 0) / static_cast<double>(yh.size());
    Matrix d(yh.rows(), yh.cols());
    for (Eigen::Index i = 0; i < yh.size(); ++i) {
      const double e = yh.data()[i] - y.data()[i];
      d.data()[i] = g * std::clamp(e, -delta, delta);
    }
    tp.AccumulateGrad(y_hat, d);
  });
}

Var MseLoss(Tape& t, Var y_hat, const Matrix& y) {
  Matrix out(1, 1);
  out(0, 0) = MseLoss(y, t.value(y_hat));
  return t.Record(std::move(out), {y_hat}, [y_hat, y](Tape& tp, Var self) {
    const Matrix& yh = tp.value(y_hat);
    const double g = tp.grad_ref(self)(0, 0) * 2.0 / static_cast<double>(yh.size());
    tp.AccumulateGrad(y_hat, g * (yh - y));
  });
}

BatchStats AccumulateBatch(Model& model, const std::vector<const STWindow*>& batch, LossKind loss, double delta,
                           const StepSchedule& schedule, Mode mode, std::mt19937_64* rng) {
  BatchStats stats;
  if (batch.empty()) return stats;
  const double inv = 1.0 / static_cast<double>(batch.size());
  ForwardOptions opts;
  opts.mode = mode;
  opts.rng = rng;
  opts.spatial_prior = schedule.r_spatial;
  opts.temporal_prior = schedule.r_temporal;
  for (const STWindow* w : batch) {
    Tape t;
    const ForwardResult r = Forward(t, model, *w, opts);
    const Matrix& target = w->targets.data;
    Var task = loss == LossKind::kHuber ? HuberLoss(t, r.prediction, target, delta) : MseLoss(t, r.prediction, target);
    Var total = ad::Add(t, task, ad::Add(t, ad::Scale(t, r.kl_spatial, schedule.lambda1),
                                         ad::Scale(t, r.kl_temporal, schedule.lambda2)));
    Var scaled = ad::Scale(t, total, inv);
    t.Backward(scaled);
    stats.objective += t.scalar(total) * inv;
    stats.task_loss += t.scalar(task) * inv;
    stats.kl_spatial += t.scalar(r.kl_spatial) * inv;
    stats.kl_temporal += t.scalar(r.kl_temporal) * inv;
  }
  return stats;
}

void Adam::Step(ParamSet& params, double lr) {
  auto& ps = params.params();
  if (m_.empty()) {
    for (const Param& p : ps) {
      m_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    }
  }
  if (m_.size() != ps.size()) throw ShapeError("adam: parameter set changed between steps");
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (size_t i = 0; i < ps.size(); ++i) {
    Param& p = ps[i];
    if (p.grad.size() == 0) continue;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

double ClipGradNorm(ParamSet& params, double max_norm) {
  const double norm = params.GradNorm();
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (Param& p : params.params()) {
      if (p.grad.size() != 0) p.grad *= s;
    }
  }
  return norm;
}

Metrics ComputeMetrics(const std::vector<Tensor3>& targets, const std::vector<Tensor3>& predictions) {
  if (targets.size() != predictions.size()) throw ShapeError("metrics: target and prediction counts differ");
  double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
  long n = 0, n_pct = 0;
  for (size_t w = 0; w < targets.size(); ++w) {
    const Matrix& y = targets[w].data;
    const Matrix& yh = predictions[w].data;
    CheckSameShape(y, yh, "metrics");
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double e = y.data()[i] - yh.data()[i];
      abs_sum += std::abs(e);
      sq_sum += e * e;
      ++n;
      if (y.data()[i] != 0.0) {
        pct_sum += std::abs(e / y.data()[i]);
        ++n_pct;
      }
    }
  }
  Metrics m;
  if (n > 0) {
    m.mae = abs_sum / static_cast<double>(n);
    m.rmse = std::sqrt(sq_sum / static_cast<double>(n));
  }
  if (n_pct > 0) m.mape = 100.0 * pct_sum / static_cast<double>(n_pct);
  return m;
}

Metrics Evaluate(Model& model, const std::vector<STWindow>& windows) {
  std::vector<Tensor3> targets, preds;
  targets.reserve(windows.size());
  preds.reserve(windows.size());
  for (const STWindow& w : windows) {
    targets.push_back(w.targets);
    preds.push_back(PredictTensor(model, w));
  }
  return ComputeMetrics(targets, preds);
}

TrainResult Train(Model& model, const std::vector<STWindow>& train, const std::vector<STWindow>& val,
                  const TrainConfig& config, const TrainOutputs& outputs) {
  config.Validate();
  if (train.empty()) throw ValueError("train: no training windows");
  if (!outputs.checkpoint_dir.empty()) std::filesystem::create_directories(outputs.checkpoint_dir);
  const ModelConfig& mc = model.config();
  std::mt19937_64 order_rng(config.seed);
  std::mt19937_64 noise_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  Adam adam(config.adam_beta1, config.adam_beta2, config.adam_eps);
  double lr = config.learning_rate;

  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<Matrix> best_values;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    StepSchedule sched;
    sched.r_spatial = PriorValue(mc.spatial_prior, epoch);
    sched.r_temporal = PriorValue(mc.temporal_prior, epoch);
    std::tie(sched.lambda1, sched.lambda2) = LambdaValue(epoch, config.lambda_anneal_epochs, mc.lambda1, mc.lambda2);
    std::shuffle(order.begin(), order.end(), order_rng);

    EpochReport rep;
    rep.epoch = epoch;
    rep.r_spatial = sched.r_spatial;
    rep.r_temporal = sched.r_temporal;
    rep.lambda1 = sched.lambda1;
    rep.lambda2 = sched.lambda2;
    rep.learning_rate = lr;
    int batches = 0;
    double windows_seen = 0.0;
    for (size_t b = 0; b < order.size(); b += config.batch_size) {
      std::vector<const STWindow*> batch;
      for (size_t k = b; k < std::min(order.size(), b + config.batch_size); ++k) batch.push_back(&train[order[k]]);
      model.params().ZeroGrad();
      const BatchStats s = AccumulateBatch(model, batch, config.loss, mc.delta, sched, Mode::kTrain, &noise_rng);
      const double grad_norm = model.params().GradNorm();
      if (!std::isfinite(s.objective) || !std::isfinite(grad_norm)) {
        std::ostringstream msg;
        msg << "non-finite training objective at epoch " << epoch << ", batch " << batches << ": objective "
            << s.objective << ", task " << s.task_loss << ", kl_spatial " << s.kl_spatial << ", kl_temporal "
            << s.kl_temporal << ", grad norm " << grad_norm;
        throw NumericError(msg.str());
      }
      ClipGradNorm(model.params(), config.grad_clip);
      adam.Step(model.params(), lr);
      rep.train_loss += s.objective;
      rep.task_loss += s.task_loss;
      const double nb = static_cast<double>(batch.size());
      rep.kl_spatial += s.kl_spatial * nb;
      rep.kl_temporal += s.kl_temporal * nb;
      windows_seen += nb;
      ++batches;
    }
    rep.train_loss /= batches;
    rep.task_loss /= batches;
    rep.kl_spatial /= windows_seen;
    rep.kl_temporal /= windows_seen;

    if (!val.empty()) {
      rep.val = Evaluate(model, val);
      if (rep.val.mae < best) {
        best = rep.val.mae;
        since_best = 0;
        result.best_epoch = epoch;
        result.best_val_mae = best;
        best_values.clear();
        for (const Param& p : model.params().params()) best_values.push_back(p.value);
        if (!outputs.checkpoint_dir.empty()) {
          SaveCheckpoint(outputs.checkpoint_dir / "best.ckpt", model, Json{{"epoch", epoch}, {"val_mae", best}});
        }
      } else if (++since_best >= config.lr_patience) {
        lr *= config.lr_decay_ratio;
        since_best = 0;
      }
    }
    if (!outputs.checkpoint_dir.empty() && config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0) {
      SaveCheckpoint(outputs.checkpoint_dir / ("epoch_" + std::to_string(epoch) + ".ckpt"), model, Json{{"epoch", epoch}});
    }
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (outputs.epoch_log != nullptr) *outputs.epoch_log << Json(rep).dump() << '\n' << std::flush;
    result.reports.push_back(rep);
  }

  if (config.restore_best && !best_values.empty()) {
    auto& ps = model.params().params();
    for (size_t i = 0; i < ps.size(); ++i) ps[i].value = best_values[i];
  }
  if (!outputs.checkpoint_dir.empty()) {
    SaveCheckpoint(outputs.checkpoint_dir / "last.ckpt", model, Json{{"epochs", config.epochs}});
    if (val.empty()) SaveCheckpoint(outputs.checkpoint_dir / "best.ckpt", model, Json{{"epochs", config.epochs}});
  }
  return result;
}

}  // namespace stgib
