#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "milr/training.hpp"

namespace milr {

struct MilrConfig {
  double t = 0.9;  // threshold accuracy
  double l = 0.0;
  double u = 1.0;
  int s = 5;   // bisection steps
  int e = 10;  // epochs per probe

  void validate() const;
};

struct MilrStep {
  int iteration = 0;
  double m = 0;
  double best_acc = 0;
  bool passed = false;
  bool diverged = false;
};

struct MilrResult {
  std::optional<double> eta_star;
  bool found = false;
  std::vector<MilrStep> trace;
  double l_final = 0, u_final = 0;
};

struct ProbeOutcome {
  double best_acc = 0;
  bool diverged = false;
};

// Bisection on [l, u] against an arbitrary probe. A probe passes iff it did not
// diverge and reached accuracy >= t; pass moves l up, fail moves u down.
MilrResult bisect(const MilrConfig& cfg, const std::function<ProbeOutcome(double)>& probe);

// Every probe trains a fresh copy of `init` with shuffle seed train_cfg.shuffle_seed.
MilrResult estimate_milr(const MlpD& init, const Dataset& ds, const MilrConfig& cfg, const TrainConfig& train_cfg,
                         const std::function<void(const MlpD&)>& on_probe_start = {});

// CSV rows: iteration,m,best_acc,passed
std::string milr_trace_csv(const MilrResult& r);

}  // namespace milr
