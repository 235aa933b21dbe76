#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "milr/errors.hpp"
#include "milr/rng.hpp"

namespace milr {

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class InitScheme { Kaiming, LeCun, NTK };

std::string to_string(InitScheme s);
InitScheme parse_scheme(const std::string& s);

struct ArchSpec {
  int n0 = 1;
  std::vector<int> hidden;  // n_1..n_L
  int out_dim = 1;

  int depth() const { return static_cast<int>(hidden.size()); }
  int weight_layers() const { return depth() + 1; }
  // n_l for l = 0..L+1
  int width(int l) const { return l == 0 ? n0 : (l <= depth() ? hidden[l - 1] : out_dim); }
  // Experiment architectures need L >= 1; the layout itself also accepts the
  // single-weight-layer case (L = 0) used by the linear baseline.
  void validate() const;
  void validate_widths() const;

  static ArchSpec constant(int n0, int width, int depth, int out_dim);
  bool operator==(const ArchSpec&) const = default;
};

std::size_t count_params(const ArchSpec& arch);

// Flat parameter layout: layer l (1-based) is stored row-major in
// [offset(l), offset(l+1)). Index (i, j) of W^(l) maps to offset(l) + i*n_{l-1} + j.
class ParamLayout {
 public:
  ParamLayout() = default;
  explicit ParamLayout(const ArchSpec& arch) {
    arch.validate_widths();
    offsets_.push_back(0);
    for (int l = 1; l <= arch.weight_layers(); ++l) {
      rows_.push_back(arch.width(l));
      cols_.push_back(arch.width(l - 1));
      offsets_.push_back(offsets_.back() + static_cast<std::size_t>(rows_.back()) * cols_.back());
    }
  }
  int layers() const { return static_cast<int>(rows_.size()); }
  std::size_t size() const { return offsets_.back(); }
  std::size_t offset(int l) const { return offsets_[l - 1]; }
  std::size_t layer_size(int l) const { return offsets_[l] - offsets_[l - 1]; }
  int rows(int l) const { return rows_[l - 1]; }
  int cols(int l) const { return cols_[l - 1]; }
  int layer_of(std::size_t mu) const {
    int l = 1;
    while (mu >= offsets_[l]) ++l;
    return l;
  }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<int> rows_, cols_;
};

template <class Scalar>
using ParamVector = Vec<Scalar>;

template <class Scalar>
Eigen::Map<RowMat<Scalar>> layer_view(const ParamLayout& lay, Vec<Scalar>& v, int l) {
  return {v.data() + lay.offset(l), lay.rows(l), lay.cols(l)};
}
template <class Scalar>
Eigen::Map<const RowMat<Scalar>> layer_view(const ParamLayout& lay, const Vec<Scalar>& v, int l) {
  return {v.data() + lay.offset(l), lay.rows(l), lay.cols(l)};
}

template <class Scalar>
class Mlp {
 public:
  Mlp() = default;
  Mlp(const ArchSpec& arch, InitScheme scheme, std::uint64_t seed = 0)
      : arch_(arch), layout_(arch), scheme_(scheme), seed_(seed),
        params_(Vec<Scalar>::Zero(static_cast<Eigen::Index>(layout_.size()))) {
    for (int l = 1; l <= layout_.layers(); ++l)
      mult_.push_back(scheme == InitScheme::NTK ? Scalar(std::sqrt(2.0 / layout_.cols(l))) : Scalar(1));
  }

  const ArchSpec& arch() const { return arch_; }
  const ParamLayout& layout() const { return layout_; }
  InitScheme scheme() const { return scheme_; }
  std::uint64_t seed() const { return seed_; }
  int layers() const { return layout_.layers(); }
  std::size_t size() const { return layout_.size(); }

  Vec<Scalar>& params() { return params_; }
  const Vec<Scalar>& params() const { return params_; }
  auto weight(int l) { return layer_view<Scalar>(layout_, params_, l); }
  auto weight(int l) const { return layer_view<Scalar>(layout_, params_, l); }
  Scalar multiplier(int l) const { return mult_[l - 1]; }
  void set_multiplier(int l, Scalar m) { mult_[l - 1] = m; }

  template <class T>
  Mlp<T> cast() const {
    Mlp<T> out(arch_, scheme_, seed_);
    out.params() = params_.template cast<T>();
    for (int l = 1; l <= layers(); ++l) out.set_multiplier(l, T(mult_[l - 1]));
    return out;
  }

 private:
  ArchSpec arch_;
  ParamLayout layout_;
  InitScheme scheme_ = InitScheme::Kaiming;
  std::uint64_t seed_ = 0;
  Vec<Scalar> params_;
  std::vector<Scalar> mult_;
};

using MlpD = Mlp<double>;

template <class Scalar>
Mlp<Scalar> init_network(const ArchSpec& arch, InitScheme scheme, Rng& rng) {
  Mlp<Scalar> net(arch, scheme, rng.seed());
  auto& p = net.params();
  for (int l = 1; l <= net.layers(); ++l) {
    const double fan_in = net.layout().cols(l);
    const auto off = static_cast<Eigen::Index>(net.layout().offset(l));
    const auto sz = static_cast<Eigen::Index>(net.layout().layer_size(l));
    for (Eigen::Index i = off; i < off + sz; ++i) {
      switch (scheme) {
        case InitScheme::Kaiming: p[i] = Scalar(rng.normal() * std::sqrt(2.0 / fan_in)); break;
        case InitScheme::LeCun: p[i] = Scalar(rng.uniform(-1.0 / fan_in, 1.0 / fan_in)); break;
        case InitScheme::NTK: p[i] = Scalar(rng.normal()); break;
      }
    }
  }
  return net;
}

template <class Scalar>
Mlp<Scalar> init_network(const ArchSpec& arch, InitScheme scheme, std::uint64_t seed) {
  Rng rng(seed);
  return init_network<Scalar>(arch, scheme, rng);
}

// Columns are samples. pre[l-1] = z^(l), l = 1..L+1; act[l-1] = sigma(z^(l)), l = 1..L.
template <class Scalar>
struct ForwardTrace {
  Mat<Scalar> input;
  std::vector<Mat<Scalar>> pre;
  std::vector<Mat<Scalar>> act;

  const Mat<Scalar>& output() const { return pre.back(); }
  const Mat<Scalar>& z(int l) const { return pre[l - 1]; }
  // sigma^(l); sigma^(0) is the input.
  const Mat<Scalar>& a(int l) const { return l == 0 ? input : act[l - 1]; }
  // 1{z^(l) > 0} as 0/1 entries (sigma'(0) = 0).
  Mat<Scalar> sign_pattern(int l) const { return (pre[l - 1].array() > Scalar(0)).template cast<Scalar>(); }
};

template <class Scalar, class Derived>
ForwardTrace<Scalar> forward(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() != net.arch().n0)
    throw ShapeError("forward: input has " + std::to_string(x.rows()) + " rows, expected " +
                     std::to_string(net.arch().n0));
  if (!x.allFinite()) throw NumericError("forward: non-finite input", 0);
  ForwardTrace<Scalar> tr;
  tr.input = x.template cast<Scalar>();
  const int layers = net.layers();
  tr.pre.reserve(layers);
  tr.act.reserve(layers - 1);
  for (int l = 1; l <= layers; ++l) {
    const Mat<Scalar>& prev = tr.a(l - 1);
    tr.pre.push_back(net.multiplier(l) * (net.weight(l) * prev));
    if (l < layers) tr.act.push_back(tr.pre.back().cwiseMax(Scalar(0)));
  }
  return tr;
}

void save_mlp(const MlpD& net, const std::string& path);
MlpD load_mlp(const std::string& path);

}  // namespace milr
