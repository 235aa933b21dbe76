#include "milr/network.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace milr {

std::string to_string(InitScheme s) {
  switch (s) {
    case InitScheme::Kaiming: return "kaiming";
    case InitScheme::LeCun: return "lecun";
    case InitScheme::NTK: return "ntk";
  }
  return "?";
}

InitScheme parse_scheme(const std::string& s) {
  std::string t(s);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "kaiming" || t == "he") return InitScheme::Kaiming;
  if (t == "lecun") return InitScheme::LeCun;
  if (t == "ntk") return InitScheme::NTK;
  throw ConfigError("unknown init scheme '" + s + "'");
}

void ArchSpec::validate() const {
  if (hidden.empty()) throw ConfigError("invalid architecture: depth L must be >= 1");
  validate_widths();
}

void ArchSpec::validate_widths() const {
  if (n0 < 1 || out_dim < 1) throw ConfigError("invalid architecture: zero-width input or output");
  for (std::size_t i = 0; i < hidden.size(); ++i)
    if (hidden[i] < 1) throw ConfigError("invalid architecture: hidden layer " + std::to_string(i + 1) + " has zero width");
}

ArchSpec ArchSpec::constant(int n0, int width, int depth, int out_dim) {
  ArchSpec a;
  a.n0 = n0;
  a.hidden.assign(std::max(depth, 0), width);
  a.out_dim = out_dim;
  a.validate();
  return a;
}

std::size_t count_params(const ArchSpec& arch) {
  arch.validate_widths();
  std::size_t p = 0;
  for (int l = 1; l <= arch.weight_layers(); ++l)
    p += static_cast<std::size_t>(arch.width(l)) * arch.width(l - 1);
  return p;
}

// Text container, one token stream:
//   milr-mlp 1
//   n0 <n0> hidden <L> <n_1> ... <n_L> out <out_dim>
//   scheme <name> seed <u64>
//   layer <l> <rows> <cols> <multiplier>   followed by rows*cols values, row-major
// Values are written with 17 significant digits, which round-trips doubles exactly.
void save_mlp(const MlpD& net, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  const auto& a = net.arch();
  f << "milr-mlp 1\n";
  f << "n0 " << a.n0 << " hidden " << a.depth();
  for (int w : a.hidden) f << ' ' << w;
  f << " out " << a.out_dim << "\n";
  f << "scheme " << to_string(net.scheme()) << " seed " << net.seed() << "\n";
  for (int l = 1; l <= net.layers(); ++l) {
    auto W = net.weight(l);
    f << "layer " << l << ' ' << W.rows() << ' ' << W.cols() << ' ' << num(net.multiplier(l)) << "\n";
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      for (Eigen::Index j = 0; j < W.cols(); ++j) f << (j ? " " : "") << num(W(i, j));
      f << "\n";
    }
  }
  if (!f) throw DataError("write failed: " + path);
}

MlpD load_mlp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::string tok;
  int version = 0;
  auto expect = [&](const char* key) {
    if (!(f >> tok) || tok != key) throw DataError(path + ": expected '" + key + "'");
  };
  expect("milr-mlp");
  f >> version;
  if (version != 1) throw DataError(path + ": unsupported version");
  ArchSpec a;
  int depth = 0;
  expect("n0");
  f >> a.n0;
  expect("hidden");
  f >> depth;
  if (!f || depth < 0 || depth > 100000) throw DataError(path + ": bad depth");
  a.hidden.resize(depth);
  for (auto& w : a.hidden) f >> w;
  expect("out");
  f >> a.out_dim;
  std::string scheme;
  std::uint64_t seed = 0;
  expect("scheme");
  f >> scheme;
  expect("seed");
  f >> seed;
  if (!f) throw DataError(path + ": truncated header");
  MlpD net(a, parse_scheme(scheme), seed);
  for (int l = 1; l <= net.layers(); ++l) {
    int idx = 0, rows = 0, cols = 0;
    std::string mult;
    expect("layer");
    f >> idx >> rows >> cols >> mult;
    if (!f || idx != l || rows != net.layout().rows(l) || cols != net.layout().cols(l))
      throw DataError(path + ": layer " + std::to_string(l) + " header mismatch");
    net.set_multiplier(l, std::strtod(mult.c_str(), nullptr));
    auto W = net.weight(l);
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j) {
        if (!(f >> tok)) throw DataError(path + ": truncated weights in layer " + std::to_string(l));
        W(i, j) = std::strtod(tok.c_str(), nullptr);
      }
  }
  return net;
}

}  // namespace milr
