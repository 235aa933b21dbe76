#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

using namespace milr;

namespace {

BatchD scalar_batch(std::initializer_list<double> xs, std::initializer_list<double> ys) {
  BatchD b;
  b.inputs = Mat<double>(1, static_cast<Eigen::Index>(xs.size()));
  b.targets = Mat<double>(1, static_cast<Eigen::Index>(ys.size()));
  Eigen::Index j = 0;
  for (double x : xs) b.inputs(0, j++) = x;
  j = 0;
  for (double y : ys) b.targets(0, j++) = y;
  return b;
}

MlpD one_weight(double w) {
  MlpD net(ArchSpec{1, {}, 1}, InitScheme::Kaiming, 0);
  net.params() << w;
  return net;
}

}  // namespace

TEST_CASE("loss examples") {
  CHECK(loss(one_weight(2), scalar_batch({1}, {1}), LossKind::MSE) == doctest::Approx(0.5));
  CHECK(loss(one_weight(1), scalar_batch({1, 3}, {1, 1}), LossKind::MSE) == doctest::Approx(1.0));
  MlpD zero(ArchSpec{3, {}, 10}, InitScheme::Kaiming, 0);
  zero.params().setZero();
  BatchD b;
  b.inputs = Mat<double>::Ones(3, 2);
  b.labels = {3, 7};
  CHECK(loss(zero, b, LossKind::CrossEntropy) == doctest::Approx(std::log(10.0)).epsilon(1e-14));
}

TEST_CASE("loss reports the non-finite layer") {
  auto net = init_network<double>({2, {3}, 1}, InitScheme::Kaiming, 0);
  net.weight(1)(0, 0) = 1e300;
  net.weight(1)(1, 0) = 1e300;
  net.weight(2).setConstant(1e300);
  BatchD b;
  b.inputs = Mat<double>::Constant(2, 1, 1e10);
  b.targets = Mat<double>::Zero(1, 1);
  try {
    loss(net, b, LossKind::MSE);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.layer >= 1);
  }
}

TEST_CASE("gradient and Hessian of a single weight") {
  auto net = one_weight(2);
  auto b = scalar_batch({3}, {1});
  CHECK(grad(net, b, LossKind::MSE)[0] == doctest::Approx(15));
  Vec<double> v(1);
  v << 1;
  CHECK(hvp(net, b, LossKind::MSE, v)[0] == doctest::Approx(9));
}

TEST_CASE("inactive unit passes no gradient to its incoming weights") {
  MlpD net(ArchSpec{2, {2}, 1}, InitScheme::Kaiming, 0);
  net.params() << -1, -1, 1, 1, 1, 1;  // unit 0 has z < 0 for x = (1, 2)
  BatchD b;
  b.inputs = Mat<double>(2, 1);
  b.inputs << 1, 2;
  b.targets = Mat<double>::Zero(1, 1);
  auto g = grad(net, b, LossKind::MSE);
  CHECK(g[0] == 0);
  CHECK(g[1] == 0);
  CHECK(g[2] != 0);
}

TEST_CASE("gradient and HVP against finite differences") {
  Rng r(123);
  for (auto kind : {LossKind::MSE, LossKind::CrossEntropy}) {
    for (int i = 0; i < 20; ++i) {
      auto c = oracle::random_tiny_case(r, kind);
      CAPTURE(i);
      CHECK(c.net.size() <= 200);
      CHECK(oracle::max_rel_err(grad(c.net, c.batch, kind), oracle::fd_grad(c.net, c.batch, kind)) < 1e-5);
      Vec<double> v = gaussian_vector<double>(c.net.size(), r);
      CHECK(oracle::max_rel_err(hvp(c.net, c.batch, kind, v), oracle::fd_hvp(c.net, c.batch, kind, v)) < 1e-4);
    }
  }
}

TEST_CASE("HVP symmetry and linearity") {
  Rng r(7);
  for (auto kind : {LossKind::MSE, LossKind::CrossEntropy}) {
    for (int i = 0; i < 10; ++i) {
      auto c = oracle::random_tiny_case(r, kind);
      HessianOperator<double> H(c.net, c.batch, kind);
      const auto P = H.dim();
      Vec<double> u = gaussian_vector<double>(P, r), v = gaussian_vector<double>(P, r);
      const double frob = std::sqrt(exact_frob_sq<double>(H, P));
      CHECK(std::abs(u.dot(H(v)) - v.dot(H(u))) <= 1e-9 * u.norm() * v.norm() * frob);
      const double a = 0.7, b = -1.3;
      Vec<double> lhs = H(a * u + b * v), rhs = a * H(u) + b * H(v);
      CHECK((lhs - rhs).norm() <= 1e-9 * rhs.norm());
    }
  }
}

TEST_CASE("dense Hessian") {
  Rng r(99);
  auto net = init_network<double>({2, {3}, 1}, InitScheme::Kaiming, r);
  BatchD b;
  b.inputs = Mat<double>::Random(2, 4);
  b.targets = Mat<double>::Random(1, 4);
  auto H = dense_hessian(net, b, LossKind::MSE);
  CHECK(H.rows() == 9);
  CHECK(H.cols() == 9);

  for (auto kind : {LossKind::MSE, LossKind::CrossEntropy}) {
    for (int i = 0; i < 10; ++i) {
      auto c = oracle::random_tiny_case(r, kind);
      auto D = dense_hessian(c.net, c.batch, kind);
      CHECK((D - D.transpose()).cwiseAbs().maxCoeff() < 1e-9);
      Vec<double> e = Vec<double>::Zero(D.cols());
      const Eigen::Index j = D.cols() / 2;
      e[j] = 1;
      CHECK(D.col(j) == hvp(c.net, c.batch, kind, e));
      Eigen::SelfAdjointEigenSolver<Mat<double>> es(D, Eigen::EigenvaluesOnly);
      const double fro = D.squaredNorm();
      CHECK(std::abs(es.eigenvalues().squaredNorm() - fro) <= 1e-8 * fro);
    }
  }
  auto big = init_network<double>({10, {150}, 10}, InitScheme::Kaiming, 1);
  BatchD bb;
  bb.inputs = Mat<double>::Random(10, 2);
  bb.labels = {0, 1};
  CHECK_THROWS_AS(dense_hessian(big, bb, LossKind::CrossEntropy), ConfigError);
}

TEST_CASE("expected MSE Hessian over y drops the single-factor cross term") {
  // H = J^T J + (f - y) d^2 f; averaging over y ~ N(0,1) leaves J^T J + f d^2 f.
  Rng r(31);
  auto net = init_network<double>({4, {5, 5}, 1}, InitScheme::Kaiming, r);
  BatchD b;
  b.inputs = gaussian_vector<double>(4, r);
  b.targets = Mat<double>::Zero(1, 1);
  const auto H0 = dense_hessian(net, b, LossKind::MSE);  // y = 0
  Mat<double> acc = Mat<double>::Zero(H0.rows(), H0.cols());
  const int draws = 4000;
  std::vector<double> ys;
  for (int i = 0; i < draws; ++i) {
    b.targets(0, 0) = r.normal();
    ys.push_back(b.targets(0, 0));
    acc += dense_hessian(net, b, LossKind::MSE);
  }
  acc /= draws;
  double ybar = 0;
  for (double y : ys) ybar += y;
  ybar /= draws;
  // H is affine in y: E_y H - H(y=0) = -ybar * d^2 f, so the residual must scale with the sample mean of y.
  b.targets(0, 0) = 1.0;
  const Mat<double> d2f = H0 - dense_hessian(net, b, LossKind::MSE);
  CHECK((acc - H0 + ybar * d2f).cwiseAbs().maxCoeff() <= 1e-10 * H0.cwiseAbs().maxCoeff());
  CHECK(std::abs(ybar) < 3 / std::sqrt(double(draws)));
}

TEST_CASE("layer Jacobian") {
  Rng r(4);
  auto net = init_network<double>({2, {3, 3}, 1}, InitScheme::NTK, r);
  Vec<double> x = gaussian_vector<double>(2, r);
  auto J2 = layer_jacobian(net, x, 2);
  CHECK(J2.rows() == 3);
  CHECK(J2.cols() == 15);
  auto J1 = layer_jacobian(net, x, 1);
  for (int i = 0; i < 3; ++i)
    for (int ip = 0; ip < 3; ++ip)
      for (int j = 0; j < 2; ++j)
        CHECK(J1(ip, i * 2 + j) == (ip == i ? doctest::Approx(x[j] * net.multiplier(1)) : doctest::Approx(0)));
  CHECK_THROWS_AS(layer_jacobian(net, x, 4), ConfigError);

  for (int l = 1; l <= 3; ++l) {
    auto J = layer_jacobian(net, x, l);
    Mat<double> F(J.rows(), J.cols());
    for (Eigen::Index mu = 0; mu < J.cols(); ++mu) {
      MlpD p = net, m = net;
      const double h = fd_step(net.params()[mu]);
      p.params()[mu] += h;
      m.params()[mu] -= h;
      F.col(mu) = (forward(p, x).z(l) - forward(m, x).z(l)) / (2 * h);
    }
    CHECK((J - F).cwiseAbs().maxCoeff() < 1e-5 * F.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("layer second derivative") {
  Rng r(8);
  auto net = init_network<double>({3, {4, 4}, 1}, InitScheme::Kaiming, r);
  Vec<double> x = gaussian_vector<double>(3, r);
  const auto& lay = net.layout();
  // same layer -> zero
  CHECK(layer_second_derivative(net, x, 2, lay.offset(2) + 1, lay.offset(2) + 5).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(layer_second_derivative_exact(net, x, 2, lay.offset(2) + 1, lay.offset(2) + 5).cwiseAbs().maxCoeff() == 0);
  // every pair up to layer 3: exact formula vs finite differences, and symmetry
  const std::size_t P = lay.offset(3) + lay.layer_size(3);
  double worst = 0, scale = 0;
  for (std::size_t mu = 0; mu < P; mu += 3)
    for (std::size_t nu = 0; nu < P; nu += 5) {
      auto fd = layer_second_derivative(net, x, 3, mu, nu);
      auto ex = layer_second_derivative_exact(net, x, 3, mu, nu);
      worst = std::max(worst, (fd - ex).cwiseAbs().maxCoeff());
      scale = std::max(scale, ex.cwiseAbs().maxCoeff());
      auto sw = layer_second_derivative(net, x, 3, nu, mu);
      CHECK((sw - fd).cwiseAbs().maxCoeff() <= 1e-3 * std::max(1e-12, fd.cwiseAbs().maxCoeff()));
    }
  CHECK(scale > 0);
  CHECK(worst < 1e-6 * scale);
}

TEST_CASE("two-layer second derivative has one nonzero entry") {
  // z^(2) = W2 relu(W1 x): d^2 z / dW1[c][d] dW2[0][c] = relu'(z1_c) x_d
  MlpD net(ArchSpec{2, {2}, 1}, InitScheme::Kaiming, 0);
  net.params() << 1, 0.5, -1, 0.25, 2, 3;
  Vec<double> x(2);
  x << 0.3, 0.7;
  const std::size_t mu = 1, nu = 4;  // W1[0][1], W2[0][0]
  auto d = layer_second_derivative(net, x, 2, mu, nu);
  CHECK(d.size() == 1);
  CHECK(d[0] == doctest::Approx(0.7).epsilon(1e-6));
  auto e = layer_second_derivative_exact(net, x, 2, mu, nu);
  CHECK(e[0] == doctest::Approx(0.7).epsilon(1e-14));
  // inactive unit 1 (z = -0.3 + 0.175 < 0) -> zero
  CHECK(layer_second_derivative_exact(net, x, 2, 3, 5)[0] == 0);
  CHECK_THROWS_AS(layer_second_derivative(net, x, 1, 0, 4), ConfigError);
}
