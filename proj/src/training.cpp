#include "milr/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

namespace milr {

void TrainConfig::validate() const {
  if (!(base_lr > 0) || !std::isfinite(base_lr)) throw ConfigError("train: base_lr must be positive");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(input_layer_multiplier >= 0 && input_layer_multiplier <= 1))
    throw ConfigError("train: input_layer_multiplier must lie in [0, 1]");
}

namespace {

int argmax_lowest(const Mat<double>& out, Eigen::Index j) {
  int best = 0;
  for (Eigen::Index c = 1; c < out.rows(); ++c)
    if (out(c, j) > out(best, j)) best = static_cast<int>(c);
  return best;
}

std::size_t count_correct(const Mat<double>& out, const Dataset& ds, const int* idx, Eigen::Index n) {
  std::size_t ok = 0;
  for (Eigen::Index j = 0; j < n; ++j) ok += argmax_lowest(out, j) == ds.labels[idx[j]];
  return ok;
}

}  // namespace

double evaluate_accuracy(const MlpD& net, const Dataset& ds, const std::vector<int>& split) {
  if (split.empty()) throw DataError("evaluate_accuracy: empty split");
  if (net.arch().out_dim < 2) throw ConfigError("evaluate_accuracy: classifier needs at least two outputs");
  constexpr std::size_t chunk = 2048;
  std::size_t ok = 0;
  for (std::size_t s = 0; s < split.size(); s += chunk) {
    const std::size_t e = std::min(split.size(), s + chunk);
    Mat<double> X(ds.d(), static_cast<Eigen::Index>(e - s));
    for (std::size_t j = s; j < e; ++j) X.col(static_cast<Eigen::Index>(j - s)) = ds.features.col(split[j]);
    auto tr = forward(net, X);
    ok += count_correct(tr.output(), ds, split.data() + s, X.cols());
  }
  return double(ok) / double(split.size());
}

double sgd_step(MlpD& net, const BatchD& batch, const TrainConfig& cfg) {
  Vec<double> g;
  const double L = loss_and_grad(net, batch, cfg.loss, g);
  if (!std::isfinite(L)) return L;
  for (int l = 1; l <= net.layers(); ++l) {
    const double lr = cfg.layer_lr(l);
    if (lr == 0.0) continue;
    net.weight(l) -= lr * layer_view<double>(net.layout(), std::as_const(g), l);
  }
  return L;
}

TrainReport sgd_train(MlpD& net, const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  if (ds.train_idx.empty()) throw DataError("sgd_train: empty train split");
  if (ds.d() != net.arch().n0) throw ShapeError("sgd_train: dataset dimension does not match n0");
  if (ds.classes > net.arch().out_dim) throw ShapeError("sgd_train: fewer outputs than classes");
  std::ofstream log;
  if (!cfg.epoch_log.empty()) {
    log.open(cfg.epoch_log);
    if (!log) throw DataError("cannot write " + cfg.epoch_log);
    log << "epoch,train_loss,val_acc,diverged\n";
  }
  TrainReport rep;
  Rng shuffler(cfg.shuffle_seed);
  std::vector<int> order = ds.train_idx;
  for (int epoch = 1; epoch <= cfg.epochs && !rep.diverged; ++epoch) {
    Rng er = shuffler.derive({static_cast<std::uint64_t>(epoch)});
    std::shuffle(order.begin(), order.end(), er.engine());
    double loss_sum = 0;
    std::size_t seen = 0;
    for (std::size_t s = 0; s < order.size(); s += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), s + static_cast<std::size_t>(cfg.batch_size));
      std::vector<int> idx(order.begin() + s, order.begin() + e);
      const double L = sgd_step(net, make_batch(ds, idx, cfg.loss), cfg);
      if (!std::isfinite(L)) {
        rep.diverged = true;
        break;
      }
      loss_sum += L * double(e - s);
      seen += e - s;
    }
    rep.epochs_run = epoch;
    const double train_loss = rep.diverged ? std::numeric_limits<double>::quiet_NaN() : loss_sum / double(seen);
    double acc = 0;
    if (!rep.diverged) {
      acc = evaluate_accuracy(net, ds, ds.val_idx);
      rep.per_epoch_val_accuracy.push_back(acc);
      rep.per_epoch_train_loss.push_back(train_loss);
      rep.best_val_accuracy = std::max(rep.best_val_accuracy, acc);
    }
    if (log) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%d\n", epoch, train_loss, acc, rep.diverged ? 1 : 0);
      log << buf;
    }
    if (cfg.stop_at_accuracy && !rep.diverged && acc >= *cfg.stop_at_accuracy) break;
  }
  return rep;
}

double linear_baseline(const Dataset& ds, const TrainConfig& cfg, std::uint64_t init_seed) {
  ArchSpec a;
  a.n0 = ds.d();
  a.out_dim = ds.classes;
  auto net = init_network<double>(a, InitScheme::Kaiming, init_seed);
  TrainConfig c = cfg;
  c.input_layer_multiplier = 1.0;  // the only layer is the input layer
  c.freeze_input = false;
  c.stop_at_accuracy.reset();
  return sgd_train(net, ds, c).best_val_accuracy;
}

std::vector<GdPoint> GdTrajectory::probes() const {
  std::vector<GdPoint> out;
  for (const auto& p : points)
    if (p.step > 0 && !std::isnan(p.lambda1)) out.push_back(p);
  return out;
}

GdTrajectory full_batch_gd(MlpD& net, const Dataset& ds, const GdConfig& cfg, Rng& rng) {
  if (!(cfg.lr > 0)) throw ConfigError("gd: lr must be positive");
  if (cfg.steps < 0 || cfg.probe_interval < 1) throw ConfigError("gd: steps >= 0 and probe_interval >= 1 required");
  const BatchD batch = make_batch(ds, ds.train_idx, cfg.loss);
  GdTrajectory traj;
  Vec<double> warm;
  for (int step = 0;; ++step) {
    GdPoint pt;
    pt.step = step;
    pt.lambda1 = std::numeric_limits<double>::quiet_NaN();
    auto tr = forward(net, batch.inputs);
    pt.loss = detail::loss_of_output(tr.output(), batch, cfg.loss);
    if (!std::isfinite(pt.loss) || !tr.output().allFinite()) {
      traj.diverged = true;
      traj.points.push_back(pt);
      break;
    }
    pt.train_accuracy = double(count_correct(tr.output(), ds, ds.train_idx.data(), batch.size())) / double(batch.size());
    const bool probe = step == 0 || step % cfg.probe_interval == 0;
    if (probe) {
      HessianOperator<double> H(net, batch, cfg.loss);
      pt.lambda1 = top_eigenvalue<double>(H, H.dim(), rng, cfg.power, &warm).lambda1;
      if (step == 0) traj.initial_lambda1 = pt.lambda1;
    }
    traj.points.push_back(pt);
    if (cfg.target_accuracy && traj.target_step < 0 && pt.train_accuracy >= *cfg.target_accuracy)
      traj.target_step = step;
    if (step >= cfg.steps) break;
    if (traj.target_step >= 0 && step >= traj.target_step + cfg.extra_steps_after_target) break;
    auto g = detail::backward(net, tr, detail::output_gradient(tr.output(), batch, cfg.loss));
    net.params() -= cfg.lr * g;
  }
  return traj;
}

}  // namespace milr
