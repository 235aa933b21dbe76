#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "milr/network.hpp"

namespace milr {

enum class LossKind { MSE, CrossEntropy };

std::string to_string(LossKind k);
LossKind parse_loss(const std::string& s);

// Columns are samples. MSE reads `targets` (out_dim x k); cross-entropy reads `labels`.
template <class Scalar>
struct Batch {
  Mat<Scalar> inputs;
  Mat<Scalar> targets;
  std::vector<int> labels;

  Eigen::Index size() const { return inputs.cols(); }
};

using BatchD = Batch<double>;

namespace detail {

template <class Scalar>
void check_batch(const Mlp<Scalar>& net, const Batch<Scalar>& b, LossKind kind) {
  if (b.size() < 1) throw ShapeError("empty batch");
  if (b.inputs.rows() != net.arch().n0) throw ShapeError("batch input dimension does not match n0");
  if (kind == LossKind::MSE) {
    if (b.targets.rows() != net.arch().out_dim || b.targets.cols() != b.size())
      throw ShapeError("MSE targets must be out_dim x k");
  } else {
    if (static_cast<Eigen::Index>(b.labels.size()) != b.size()) throw ShapeError("one label per sample required");
    for (int c : b.labels)
      if (c < 0 || c >= net.arch().out_dim) throw ShapeError("class label out of range");
  }
}

template <class Scalar>
void check_finite(const ForwardTrace<Scalar>& tr) {
  for (std::size_t l = 0; l < tr.pre.size(); ++l)
    if (!tr.pre[l].allFinite())
      throw NumericError("non-finite pre-activation at layer " + std::to_string(l + 1), static_cast<int>(l + 1));
}

// Column-wise softmax, max-shifted.
template <class Scalar>
Mat<Scalar> softmax(const Mat<Scalar>& logits) {
  Mat<Scalar> p = logits.rowwise() - logits.colwise().maxCoeff();
  p = p.array().exp();
  p.array().rowwise() /= p.colwise().sum().array();
  return p;
}

template <class Scalar>
Scalar loss_of_output(const Mat<Scalar>& out, const Batch<Scalar>& b, LossKind kind) {
  const Scalar k = Scalar(b.size());
  if (kind == LossKind::MSE) return (out - b.targets).squaredNorm() / (Scalar(2) * k);
  Scalar total = 0;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const Scalar mx = out.col(j).maxCoeff();
    const Scalar lse = mx + std::log((out.col(j).array() - mx).exp().sum());
    total += lse - out(b.labels[j], j);
  }
  return total / k;
}

// dL/d(output)
template <class Scalar>
Mat<Scalar> output_gradient(const Mat<Scalar>& out, const Batch<Scalar>& b, LossKind kind) {
  const Scalar k = Scalar(b.size());
  if (kind == LossKind::MSE) return (out - b.targets) / k;
  Mat<Scalar> g = softmax(out);
  for (Eigen::Index j = 0; j < g.cols(); ++j) g(b.labels[j], j) -= Scalar(1);
  return g / k;
}

// Reverse pass from G = dL/dz^(L+1); optionally records dL/dz^(l) for every layer.
template <class Scalar>
Vec<Scalar> backward(const Mlp<Scalar>& net, const ForwardTrace<Scalar>& tr, Mat<Scalar> G,
                     std::vector<Mat<Scalar>>* deltas = nullptr) {
  Vec<Scalar> g(static_cast<Eigen::Index>(net.size()));
  const int layers = net.layers();
  if (deltas) deltas->assign(layers, Mat<Scalar>());
  for (int l = layers; l >= 1; --l) {
    layer_view<Scalar>(net.layout(), g, l).noalias() = net.multiplier(l) * G * tr.a(l - 1).transpose();
    if (deltas) (*deltas)[l - 1] = G;
    if (l > 1) {
      Mat<Scalar> up = net.multiplier(l) * (net.weight(l).transpose() * G);
      G = up.cwiseProduct(tr.sign_pattern(l - 1));
    }
  }
  return g;
}

}  // namespace detail

template <class Scalar>
Scalar loss(const Mlp<Scalar>& net, const Batch<Scalar>& batch, LossKind kind) {
  detail::check_batch(net, batch, kind);
  auto tr = forward(net, batch.inputs);
  detail::check_finite(tr);
  return detail::loss_of_output(tr.output(), batch, kind);
}

// Loss and gradient in one forward/backward pass. Does not throw on a non-finite
// loss; callers that treat divergence as data (training) inspect the return value.
template <class Scalar>
Scalar loss_and_grad(const Mlp<Scalar>& net, const Batch<Scalar>& batch, LossKind kind, Vec<Scalar>& g) {
  detail::check_batch(net, batch, kind);
  auto tr = forward(net, batch.inputs);
  const Scalar L = detail::loss_of_output(tr.output(), batch, kind);
  if (!std::isfinite(static_cast<double>(L))) return L;
  g = detail::backward(net, tr, detail::output_gradient(tr.output(), batch, kind));
  return L;
}

template <class Scalar>
Vec<Scalar> grad(const Mlp<Scalar>& net, const Batch<Scalar>& batch, LossKind kind) {
  detail::check_batch(net, batch, kind);
  auto tr = forward(net, batch.inputs);
  detail::check_finite(tr);
  return detail::backward(net, tr, detail::output_gradient(tr.output(), batch, kind));
}

// Loss Hessian at fixed (net, batch) as a linear operator. The forward trace and the
// backward deltas are cached, so each product costs one R-forward and one R-backward pass.
template <class Scalar>
class HessianOperator {
 public:
  HessianOperator(const Mlp<Scalar>& net, const Batch<Scalar>& batch, LossKind kind)
      : net_(net), kind_(kind), k_(Scalar(batch.size())) {
    detail::check_batch(net, batch, kind);
    tr_ = forward(net, batch.inputs);
    detail::check_finite(tr_);
    loss_ = detail::loss_of_output(tr_.output(), batch, kind);
    if (kind == LossKind::CrossEntropy) probs_ = detail::softmax(tr_.output());
    grad_ = detail::backward(net, tr_, detail::output_gradient(tr_.output(), batch, kind), &deltas_);
    for (int l = 1; l < net.layers(); ++l) masks_.push_back(tr_.sign_pattern(l));
  }

  Eigen::Index dim() const { return static_cast<Eigen::Index>(net_.size()); }
  Scalar loss() const { return loss_; }
  const Vec<Scalar>& gradient() const { return grad_; }
  const ForwardTrace<Scalar>& trace() const { return tr_; }

  Vec<Scalar> operator()(const Vec<Scalar>& v) const {
    if (v.size() != dim()) throw ShapeError("hvp: direction has wrong length");
    const auto& lay = net_.layout();
    const int layers = net_.layers();
    // R-forward: Rz[l-1] = directional derivative of z^(l); Ra likewise for sigma^(l).
    std::vector<Mat<Scalar>> Ra(layers);
    Mat<Scalar> Rz;
    for (int l = 1; l <= layers; ++l) {
      auto V = layer_view<Scalar>(lay, v, l);
      Rz = V * tr_.a(l - 1);
      if (l > 1) Rz.noalias() += net_.weight(l) * Ra[l - 2];
      Rz *= net_.multiplier(l);
      if (l < layers) Ra[l - 1] = Rz.cwiseProduct(masks_[l - 1]);
    }
    // Output Hessian applied to Rz^(L+1).
    Mat<Scalar> RG;
    if (kind_ == LossKind::MSE) {
      RG = Rz / k_;
    } else {
      Mat<Scalar> pr = probs_.cwiseProduct(Rz);
      RG = (pr - probs_ * pr.colwise().sum().asDiagonal()) / k_;
    }
    Vec<Scalar> out(dim());
    for (int l = layers; l >= 1; --l) {
      const Scalar m = net_.multiplier(l);
      const Mat<Scalar>& G = deltas_[l - 1];
      auto O = layer_view<Scalar>(lay, out, l);
      O.noalias() = m * RG * tr_.a(l - 1).transpose();
      if (l > 1) O.noalias() += m * G * Ra[l - 2].transpose();
      if (l > 1) {
        auto V = layer_view<Scalar>(lay, v, l);
        Mat<Scalar> up = V.transpose() * G;
        up.noalias() += net_.weight(l).transpose() * RG;
        RG = (m * up).cwiseProduct(masks_[l - 2]);
      }
    }
    return out;
  }

 private:
  const Mlp<Scalar>& net_;
  LossKind kind_;
  Scalar k_;
  ForwardTrace<Scalar> tr_;
  Scalar loss_ = 0;
  Mat<Scalar> probs_;
  Vec<Scalar> grad_;
  std::vector<Mat<Scalar>> deltas_;
  std::vector<Mat<Scalar>> masks_;
};

template <class Scalar>
Vec<Scalar> hvp(const Mlp<Scalar>& net, const Batch<Scalar>& batch, LossKind kind, const Vec<Scalar>& v) {
  return HessianOperator<Scalar>(net, batch, kind)(v);
}

// Column j is H e_j from the same operator code path.
template <class Scalar, class Op>
Mat<Scalar> assemble_dense(const Op& op, Eigen::Index P) {
  Mat<Scalar> H(P, P);
  Vec<Scalar> e = Vec<Scalar>::Zero(P);
  for (Eigen::Index j = 0; j < P; ++j) {
    e[j] = Scalar(1);
    H.col(j) = op(e);
    e[j] = Scalar(0);
  }
  return H;
}

template <class Scalar>
Mat<Scalar> dense_hessian(const Mlp<Scalar>& net, const Batch<Scalar>& batch, LossKind kind,
                          std::size_t cap = 2000) {
  if (net.size() > cap)
    throw ConfigError("dense_hessian: P = " + std::to_string(net.size()) + " exceeds cap " + std::to_string(cap));
  HessianOperator<Scalar> op(net, batch, kind);
  return assemble_dense<Scalar>(op, op.dim());
}

// d z^(l) / d mu for all weights mu in layers 1..l; shape n_l x P_{<=l}.
template <class Scalar, class Derived>
Mat<Scalar> layer_jacobian(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& x, int l) {
  if (l < 1 || l > net.layers()) throw ConfigError("layer_jacobian: layer out of range");
  auto tr = forward(net, x);
  const auto& lay = net.layout();
  Mat<Scalar> J;
  for (int q = 1; q <= l; ++q) {
    const int n = lay.rows(q), fan = lay.cols(q);
    const Scalar m = net.multiplier(q);
    Mat<Scalar> Jq = Mat<Scalar>::Zero(n, static_cast<Eigen::Index>(lay.offset(q) + lay.layer_size(q)));
    if (q > 1) {
      Mat<Scalar> gated = tr.sign_pattern(q - 1).col(0).asDiagonal() * J;
      Jq.leftCols(J.cols()).noalias() = m * (net.weight(q) * gated);
    }
    const auto off = static_cast<Eigen::Index>(lay.offset(q));
    for (int c = 0; c < n; ++c) Jq.block(c, off + Eigen::Index(c) * fan, 1, fan) = m * tr.a(q - 1).col(0).transpose();
    J.swap(Jq);
  }
  return J;
}

// Central-difference step used by all oracles.
inline double fd_step(double value) { return 1e-4 * std::max(1.0, std::abs(value)); }

// d^2 z^(l) / d mu d nu by central differences of layer_jacobian column nu along mu.
template <class Scalar, class Derived>
Vec<Scalar> layer_second_derivative(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& x, int l,
                                    std::size_t mu, std::size_t nu, std::size_t cap = 500) {
  if (l < 1 || l > net.layers()) throw ConfigError("layer_second_derivative: layer out of range");
  const std::size_t P = net.layout().offset(l) + net.layout().layer_size(l);
  if (P > cap) throw ConfigError("layer_second_derivative: P_<=l = " + std::to_string(P) + " exceeds cap");
  if (mu >= P || nu >= P) throw ConfigError("layer_second_derivative: weight index beyond layer " + std::to_string(l));
  Mlp<Scalar> p = net, m = net;
  const Scalar w = net.params()[mu];
  const Scalar h = Scalar(fd_step(static_cast<double>(w)));
  p.params()[mu] = w + h;
  m.params()[mu] = w - h;
  return (layer_jacobian(p, x, l).col(nu) - layer_jacobian(m, x, l).col(nu)) / (Scalar(2) * h);
}

// Closed form of the same quantity (sigma'' = 0): for mu in layer p < q = layer(nu),
// nu = (c, d): K_{l<-q}[:, c] * m_q * 1{z^(q-1)_d > 0} * J_{q-1}[d, mu]; zero when p = q.
template <class Scalar, class Derived>
Vec<Scalar> layer_second_derivative_exact(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& x, int l,
                                          std::size_t mu, std::size_t nu) {
  const auto& lay = net.layout();
  Vec<Scalar> out = Vec<Scalar>::Zero(lay.rows(l));
  int p = lay.layer_of(mu), q = lay.layer_of(nu);
  if (p == q) return out;
  if (p > q) {
    std::swap(mu, nu);
    std::swap(p, q);
  }
  if (q > l) throw ConfigError("layer_second_derivative_exact: weight index beyond layer " + std::to_string(l));
  auto tr = forward(net, x);
  const std::size_t local = nu - lay.offset(q);
  const int c = static_cast<int>(local / lay.cols(q)), d = static_cast<int>(local % lay.cols(q));
  if (tr.z(q - 1)(d, 0) <= Scalar(0)) return out;
  const Scalar jd = layer_jacobian(net, x, q - 1)(d, static_cast<Eigen::Index>(mu));
  Vec<Scalar> col = Vec<Scalar>::Zero(lay.rows(q));
  col[c] = net.multiplier(q) * jd;
  for (int r = q + 1; r <= l; ++r) {
    Vec<Scalar> gated = col.cwiseProduct(tr.sign_pattern(r - 1).col(0));
    col = net.multiplier(r) * (net.weight(r) * gated);
  }
  return col;
}

}  // namespace milr
