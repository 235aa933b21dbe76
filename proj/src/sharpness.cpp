#include "milr/sharpness.hpp"

namespace milr {

MeanStdErr mean_std_err(const std::vector<double>& xs) {
  MeanStdErr r;
  r.count = xs.size();
  if (xs.empty()) return r;
  double s = 0;
  for (double x : xs) s += x;
  r.mean = s / xs.size();
  if (xs.size() > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.std_err = std::sqrt(ss / (xs.size() - 1) / xs.size());
  }
  return r;
}

TheorySample make_theory_sample(const ArchSpec& arch, InitScheme scheme, Rng& rng) {
  if (arch.out_dim != 1) throw ConfigError("theory mode requires a scalar-output network");
  TheorySample s{init_network<double>(arch, scheme, rng), BatchD{}};
  Vec<double> x = gaussian_vector<double>(arch.n0, rng);
  x *= std::sqrt(double(arch.n0)) / x.norm();
  s.batch.inputs = x;
  s.batch.targets = Mat<double>::Constant(1, 1, rng.normal());
  return s;
}

Vec<double> eta_hat_weights(const ArchSpec& arch, const std::vector<double>& eta_per_layer) {
  ParamLayout lay(arch);
  if (static_cast<int>(eta_per_layer.size()) != lay.layers())
    throw ConfigError("need one learning rate per weight layer (" + std::to_string(lay.layers()) + ")");
  Vec<double> w(static_cast<Eigen::Index>(lay.size()));
  for (int l = 1; l <= lay.layers(); ++l)
    w.segment(static_cast<Eigen::Index>(lay.offset(l)), static_cast<Eigen::Index>(lay.layer_size(l)))
        .setConstant(eta_per_layer[l - 1] / std::sqrt(double(lay.cols(l))));
  return w;
}

double frobenius_sq_sample(const TheorySample& s, const FrobeniusConfig& cfg, Rng& rng, int* probes_used) {
  HessianOperator<double> H(s.net, s.batch, LossKind::MSE);
  const Eigen::Index P = H.dim();
  Vec<double> scale;
  if (cfg.kind == HessianKind::Effective) scale = eta_hat_weights(s.net.arch(), cfg.eta_per_layer);
  auto op = [&](const Vec<double>& v) -> Vec<double> {
    if (cfg.kind == HessianKind::Raw) return H(v);
    return scale.cwiseProduct(H(scale.cwiseProduct(v)));
  };
  double est;
  if (static_cast<std::size_t>(P) <= cfg.exact_cap) {
    est = exact_frob_sq<double>(op, P);
    if (probes_used) *probes_used = 0;
  } else {
    est = hutchinson_frob_sq<double>(op, P, cfg.probes, rng).mean;
    if (probes_used) *probes_used = cfg.probes;
  }
  if (!std::isfinite(est)) throw NumericError("non-finite Hessian-vector product");
  return est;
}

FrobeniusStats frobenius_sq_mc(const ArchSpec& arch, InitScheme scheme, const FrobeniusConfig& cfg, Rng& rng) {
  FrobeniusStats st;
  st.probes_per_seed = cfg.probes;
  std::vector<double> vals;
  for (int i = 0; i < cfg.seeds; ++i) {
    Rng r = rng.derive({static_cast<std::uint64_t>(i)});
    FrobeniusSeedRow row{static_cast<std::uint64_t>(i), 0.0, 0, false};
    try {
      TheorySample s = make_theory_sample(arch, scheme, r);
      row.estimate = frobenius_sq_sample(s, cfg, r, &row.probes);
      vals.push_back(row.estimate);
    } catch (const NumericError&) {
      row.diverged = true;
      ++st.discarded;
    }
    st.rows.push_back(row);
  }
  auto m = mean_std_err(vals);
  st.mean = m.mean;
  st.std_err = m.std_err;
  st.seeds = m.count;
  return st;
}

}  // namespace milr
