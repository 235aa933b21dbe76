#pragma once

#include <optional>
#include <string>
#include <vector>

#include "milr/data.hpp"
#include "milr/sharpness.hpp"

namespace milr {

struct TrainConfig {
  double base_lr = 0.1;
  double input_layer_multiplier = 1e-2;
  int batch_size = 128;
  int epochs = 10;
  LossKind loss = LossKind::CrossEntropy;
  std::uint64_t shuffle_seed = 0;
  bool freeze_input = false;
  // Stop once an epoch-end validation accuracy reaches this value. The remaining
  // epochs cannot change a pass/fail probe, so search probes set it to t.
  std::optional<double> stop_at_accuracy;
  std::string epoch_log;  // optional CSV path: epoch,train_loss,val_acc,diverged

  void validate() const;
  // Step size applied to weight layer l (1-based).
  double layer_lr(int l) const {
    if (l != 1) return base_lr;
    return freeze_input ? 0.0 : base_lr * input_layer_multiplier;
  }
};

struct TrainReport {
  std::vector<double> per_epoch_val_accuracy;
  std::vector<double> per_epoch_train_loss;
  double best_val_accuracy = 0;
  bool diverged = false;
  int epochs_run = 0;
};

// Argmax of the network output (ties -> lowest class index) against labels.
double evaluate_accuracy(const MlpD& net, const Dataset& ds, const std::vector<int>& split);

// Mini-batch SGD with per-layer rates; `net` is updated in place.
TrainReport sgd_train(MlpD& net, const Dataset& ds, const TrainConfig& cfg);

// One SGD step on a given batch (exposed for the per-layer-rate property).
// Returns the batch loss; no update is applied if it is not finite.
double sgd_step(MlpD& net, const BatchD& batch, const TrainConfig& cfg);

// Threshold accuracy t: a single-weight-layer classifier trained with the same trainer.
double linear_baseline(const Dataset& ds, const TrainConfig& cfg, std::uint64_t init_seed = 0);

struct GdPoint {
  int step = 0;  // number of updates applied before this measurement
  double loss = 0;
  double train_accuracy = 0;
  double lambda1 = 0;  // NaN when not probed at this step
};

struct GdConfig {
  double lr = 0.04;
  int steps = 100;
  int probe_interval = 10;
  LossKind loss = LossKind::CrossEntropy;
  PowerConfig power;
  // Once train accuracy reaches this level, continue `extra_steps_after_target` more steps and stop.
  std::optional<double> target_accuracy;
  int extra_steps_after_target = 0;
};

struct GdTrajectory {
  std::vector<GdPoint> points;  // one per step, plus a final measurement
  double initial_lambda1 = 0;
  bool diverged = false;
  int target_step = -1;  // first step with train accuracy >= target, -1 if never
  std::vector<GdPoint> probes() const;
};

// Full-batch gradient descent on the train split; lambda1 probed after every
// probe_interval updates (so steps / probe_interval probes), plus once at initialization.
GdTrajectory full_batch_gd(MlpD& net, const Dataset& ds, const GdConfig& cfg, Rng& rng);

}  // namespace milr
