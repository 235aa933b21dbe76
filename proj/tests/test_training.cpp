#include <algorithm>
#include <cmath>
#include <numeric>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "milr/training.hpp"

using namespace milr;

namespace {

Dataset small_gaussian(std::uint64_t seed, int d = 10, int train = 300, int val = 100) {
  GaussianSpec g;
  g.d = d;
  g.per_class_train = train;
  g.per_class_val = val;
  g.seed = seed;
  return gen_gaussian(g);
}

}  // namespace

TEST_CASE("layer learning rates") {
  TrainConfig c;
  c.base_lr = 0.5;
  CHECK(c.layer_lr(1) == doctest::Approx(0.005));
  CHECK(c.layer_lr(2) == 0.5);
  c.freeze_input = true;
  CHECK(c.layer_lr(1) == 0);
  c.input_layer_multiplier = 2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("one step with a layer-1 multiplier equals a uniform step on a pre-scaled gradient") {
  auto ds = small_gaussian(1);
  auto net = init_network<double>(ArchSpec::constant(10, 8, 2, 2), InitScheme::Kaiming, 3);
  std::vector<int> idx(ds.train_idx.begin(), ds.train_idx.begin() + 16);
  auto b = make_batch(ds, idx, LossKind::CrossEntropy);
  TrainConfig c;
  c.base_lr = 0.25;
  c.input_layer_multiplier = 0.125;
  auto a = net;
  sgd_step(a, b, c);
  Vec<double> g = grad(net, b, LossKind::CrossEntropy);
  layer_view<double>(net.layout(), g, 1) *= 0.125;
  auto u = net;
  u.params() -= 0.25 * g;
  CHECK(a.params() == u.params());
}

TEST_CASE("training is deterministic and frozen input stays put") {
  auto ds = small_gaussian(2);
  auto init = init_network<double>(ArchSpec::constant(10, 12, 2, 2), InitScheme::Kaiming, 5);
  TrainConfig c;
  c.base_lr = 0.05;
  c.epochs = 3;
  c.batch_size = 32;
  c.shuffle_seed = 99;
  auto n1 = init, n2 = init;
  auto r1 = sgd_train(n1, ds, c), r2 = sgd_train(n2, ds, c);
  CHECK(r1.per_epoch_val_accuracy == r2.per_epoch_val_accuracy);
  CHECK(r1.per_epoch_train_loss == r2.per_epoch_train_loss);
  CHECK(n1.params() == n2.params());
  CHECK(r1.epochs_run == 3);
  CHECK(r1.best_val_accuracy == *std::max_element(r1.per_epoch_val_accuracy.begin(), r1.per_epoch_val_accuracy.end()));

  c.freeze_input = true;
  auto f = init;
  sgd_train(f, ds, c);
  CHECK(f.weight(1) == init.weight(1));
  CHECK(f.weight(2) != init.weight(2));
}

TEST_CASE("huge learning rate diverges in the first epoch and stops updating") {
  auto ds = small_gaussian(3);
  auto net = init_network<double>(ArchSpec::constant(10, 12, 3, 2), InitScheme::Kaiming, 5);
  TrainConfig c;
  c.base_lr = 1e10;
  c.epochs = 5;
  c.epoch_log = "diverge_log.csv";
  auto r = sgd_train(net, ds, c);
  CHECK(r.diverged);
  CHECK(r.epochs_run == 1);
  CHECK(r.per_epoch_val_accuracy.empty());
  std::ifstream log("diverge_log.csv");
  std::string header, row;
  std::getline(log, header);
  std::getline(log, row);
  CHECK(header == "epoch,train_loss,val_acc,diverged");
  CHECK(row.substr(0, 2) == "1,");
  CHECK(row.back() == '1');
  std::remove("diverge_log.csv");
  // a non-finite batch loss leaves the weights untouched
  auto big = init_network<double>(ArchSpec::constant(10, 12, 3, 2), InitScheme::Kaiming, 5);
  big.params() *= 1e80;
  const auto before = big.params();
  BatchD b = make_batch(ds, {0, 1, 2}, LossKind::CrossEntropy);
  CHECK_FALSE(std::isfinite(sgd_step(big, b, c)));
  CHECK(big.params() == before);
}

TEST_CASE("shuffling stays inside one epoch") {
  // per-epoch permutations are seed-determined and cover every index once
  Rng s(5);
  std::vector<int> a(100);
  std::iota(a.begin(), a.end(), 0);
  Rng e1 = s.derive({1}), e1b = s.derive({1}), e2 = s.derive({2});
  auto p1 = a, p1b = a, p2 = a;
  std::shuffle(p1.begin(), p1.end(), e1.engine());
  std::shuffle(p1b.begin(), p1b.end(), e1b.engine());
  std::shuffle(p2.begin(), p2.end(), e2.engine());
  CHECK(p1 == p1b);
  CHECK(p1 != p2);
  std::sort(p1.begin(), p1.end());
  CHECK(p1 == a);
}

TEST_CASE("accuracy examples") {
  Dataset ds;
  ds.features = Mat<double>::Random(3, 1000);
  ds.classes = 10;
  for (int i = 0; i < 1000; ++i) {
    ds.labels.push_back(i % 10);
    ds.val_idx.push_back(i);
  }
  MlpD zero(ArchSpec{3, {4}, 10}, InitScheme::Kaiming, 0);
  zero.params().setZero();
  CHECK(evaluate_accuracy(zero, ds, ds.val_idx) == doctest::Approx(0.1));
  CHECK_THROWS_AS(evaluate_accuracy(zero, ds, {}), DataError);

  // memoriser: one-weight-layer net reading a one-hot code of the label
  Dataset m;
  m.classes = 3;
  m.features = Mat<double>::Identity(3, 3);
  m.labels = {0, 1, 2};
  m.train_idx = {0, 1, 2};
  MlpD id(ArchSpec{3, {}, 3}, InitScheme::Kaiming, 0);
  id.params().setZero();
  id.weight(1) = Mat<double>::Identity(3, 3);
  CHECK(evaluate_accuracy(id, m, m.train_idx) == 1.0);

  auto g = small_gaussian(8, 20, 600, 400);
  auto rnd = init_network<double>(ArchSpec::constant(20, 32, 3, 2), InitScheme::Kaiming, 1);
  const double acc = evaluate_accuracy(rnd, g, g.val_idx);
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}

TEST_CASE("random net on balanced two-class data with uninformative features") {
  // features independent of labels: accuracy concentrates near 1/2
  Dataset ds;
  ds.classes = 2;
  Rng r(12);
  ds.features = Mat<double>(20, 2000);
  for (Eigen::Index i = 0; i < ds.features.size(); ++i) ds.features.data()[i] = r.normal();
  for (int i = 0; i < 2000; ++i) {
    ds.labels.push_back(i % 2);
    ds.val_idx.push_back(i);
  }
  int inside = 0;
  for (int s = 0; s < 10; ++s) {
    auto net = init_network<double>(ArchSpec::constant(20, 32, 3, 2), InitScheme::Kaiming, s);
    const double acc = evaluate_accuracy(net, ds, ds.val_idx);
    inside += acc >= 0.4 && acc <= 0.6;
  }
  CHECK(inside == 10);
}

TEST_CASE("linear baseline on isotropic Gaussian data") {
  GaussianSpec g;  // defaults: d = 100, 9k/1k per class
  g.seed = 1;
  auto ds = gen_gaussian(g);
  TrainConfig c;
  c.epochs = 2;
  CHECK(linear_baseline(ds, c) >= 0.95);
}

TEST_CASE("full-batch GD probe count and quadratic stability") {
  auto ds = small_gaussian(6, 5, 50, 10);
  auto net = init_network<double>(ArchSpec::constant(5, 6, 2, 2), InitScheme::Kaiming, 2);
  GdConfig c;
  c.lr = 0.01;
  c.steps = 100;
  c.probe_interval = 10;
  Rng r(1);
  auto t = full_batch_gd(net, ds, c, r);
  CHECK(t.probes().size() == 10);
  CHECK(t.points.size() == 101);

  // linear net + MSE: loss is quadratic with curvature lambda1; GD is monotone iff lr < 2 / lambda1
  auto lin = init_network<double>(ArchSpec{5, {}, 2}, InitScheme::Kaiming, 4);
  const BatchD all = make_batch(ds, ds.train_idx, LossKind::MSE);
  Rng pr(2);
  const double lam = sharpness(lin, all, LossKind::MSE, pr, {1e-10, 10000}).lambda1;
  for (double f : {0.5, 0.95, 1.05, 1.5}) {
    auto n = lin;
    GdConfig q;
    q.loss = LossKind::MSE;
    q.lr = f * 2.0 / lam;
    q.steps = 200;
    q.probe_interval = 1000;
    Rng rr(3);
    auto tr = full_batch_gd(n, ds, q, rr);
    bool monotone = true;
    for (std::size_t i = 1; i < tr.points.size(); ++i) monotone &= tr.points[i].loss <= tr.points[i - 1].loss * (1 + 1e-12);
    CAPTURE(f);
    CHECK(monotone == (f < 1));
  }
}
