#include "milr/milr.hpp"

#include <cmath>
#include <cstdio>

namespace milr {

void MilrConfig::validate() const {
  if (!(l >= 0 && l < u) || !std::isfinite(u)) throw ConfigError("milr: need 0 <= l < u");
  if (s < 1 || e < 1) throw ConfigError("milr: s and e must be >= 1");
  if (!(t > 0 && t <= 1)) throw ConfigError("milr: threshold t must lie in (0, 1]");
}

MilrResult bisect(const MilrConfig& cfg, const std::function<ProbeOutcome(double)>& probe) {
  cfg.validate();
  MilrResult r;
  double l = cfg.l, u = cfg.u;
  for (int i = 1; i <= cfg.s; ++i) {
    const double m = 0.5 * (l + u);
    const ProbeOutcome o = probe(m);
    MilrStep st{i, m, o.best_acc, !o.diverged && o.best_acc >= cfg.t, o.diverged};
    r.trace.push_back(st);
    if (st.passed) {
      l = m;
      r.eta_star = m;
    } else {
      u = m;
    }
  }
  r.found = r.eta_star.has_value();
  r.l_final = l;
  r.u_final = u;
  return r;
}

MilrResult estimate_milr(const MlpD& init, const Dataset& ds, const MilrConfig& cfg, const TrainConfig& train_cfg,
                         const std::function<void(const MlpD&)>& on_probe_start) {
  cfg.validate();
  return bisect(cfg, [&](double m) {
    MlpD net = init;
    if (on_probe_start) on_probe_start(net);
    TrainConfig tc = train_cfg;
    tc.base_lr = m;
    tc.epochs = cfg.e;
    tc.stop_at_accuracy = cfg.t;
    const TrainReport rep = sgd_train(net, ds, tc);
    return ProbeOutcome{rep.best_val_accuracy, rep.diverged};
  });
}

std::string milr_trace_csv(const MilrResult& r) {
  std::string out = "iteration,m,best_acc,passed\n";
  char buf[128];
  for (const auto& s : r.trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%d\n", s.iteration, s.m, s.best_acc, s.passed ? 1 : 0);
    out += buf;
  }
  return out;
}

}  // namespace milr
