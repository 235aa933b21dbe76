#include <cmath>

#include "milr/theory.hpp"

namespace milr {

std::vector<YState> sample_y(const TheoryConfig& cfg, int max_layer, bool with_munu, Rng& rng) {
  using Q = Quantity;
  cfg.validate();
  const int L = cfg.depth();
  if (max_layer < 1 || max_layer > L + 1) throw ConfigError("sample_y: layer out of range");
  ArchSpec arch;
  arch.n0 = cfg.widths[0];
  arch.hidden.assign(cfg.widths.begin() + 1, cfg.widths.end());
  arch.out_dim = 1;
  const ParamLayout lay(arch);
  const std::size_t P_cap = lay.offset(max_layer) + lay.layer_size(max_layer);
  if (with_munu && P_cap > 4000) throw ConfigError("sample_y: two-weight quantities limited to P <= 4000");

  auto net = init_network<double>(arch, InitScheme::Kaiming, rng);
  Vec<double> x = gaussian_vector<double>(arch.n0, rng);
  const double xn = x.norm();
  x *= xn > 0 ? std::sqrt(cfg.a0() * arch.n0) / xn : 0.0;
  const auto tr = forward(net, x);

  Vec<double> w(static_cast<Eigen::Index>(lay.size()));
  for (int l = 1; l <= lay.layers(); ++l)
    w.segment(static_cast<Eigen::Index>(lay.offset(l)), static_cast<Eigen::Index>(lay.layer_size(l)))
        .setConstant(cfg.eta_at(l) / std::sqrt(double(lay.cols(l))));

  std::vector<Vec<double>> D(max_layer + 1);  // D[l] = 1{z^(l) > 0}
  for (int l = 1; l <= max_layer; ++l) D[l] = tr.sign_pattern(l).col(0);

  std::vector<Mat<double>> J(max_layer + 1);  // J[l] = dz^(l)/dmu, n_l x P_{<=l}
  std::vector<YState> out;
  for (int l = 1; l <= max_layer; ++l) {
    const int n = lay.rows(l), fan = lay.cols(l);
    const auto P = static_cast<Eigen::Index>(lay.offset(l) + lay.layer_size(l));
    J[l] = Mat<double>::Zero(n, P);
    if (l > 1) J[l].leftCols(J[l - 1].cols()).noalias() = net.weight(l) * (D[l - 1].asDiagonal() * J[l - 1]);
    const auto off = static_cast<Eigen::Index>(lay.offset(l));
    for (int c = 0; c < n; ++c) J[l].block(c, off + Eigen::Index(c) * fan, 1, fan) = tr.a(l - 1).col(0).transpose();

    const Vec<double> z = tr.z(l).col(0);
    const Vec<double> wl = w.head(P);
    const Mat<double> Ah = J[l] * wl.asDiagonal();
    const Vec<double> rowsq = Ah.rowwise().squaredNorm();
    const double dn = n, zz = z.squaredNorm();
    const Vec<double> za = Ah.transpose() * z;

    YState s;
    s.layer = l;
    s[Q::A] = rowsq.sum() / dn;
    s[Q::B] = s[Q::A] * zz / dn;
    s[Q::C] = za.squaredNorm() / (dn * dn);
    s[Q::D] = z.cwiseAbs2().dot(rowsq) / dn;
    const double ssig = tr.z(l).cwiseMax(0.0).squaredNorm() / dn;
    s.M1 = ssig;
    s.M2 = ssig * ssig;

    if (with_munu) {
      s[Q::E1] = s[Q::A] * s[Q::A];
      s[Q::E2] = (Ah * Ah.transpose()).squaredNorm() / (dn * dn);
      s[Q::E3] = rowsq.cwiseAbs2().sum() / dn;
      // Bh[j](mu, nu) = w_mu w_nu d^2 z_j / d mu d nu; nonzero only across layers.
      std::vector<Mat<double>> Bh(n, Mat<double>::Zero(P, P));
      Mat<double> K = Mat<double>::Identity(n, n);  // dz^(l)/dz^(q), q running downwards
      for (int q = l; q >= 2; --q) {
        if (q < l) K = K * net.weight(q + 1) * D[q].asDiagonal();
        const Mat<double> G = D[q - 1].asDiagonal() * J[q - 1];  // n_{q-1} x P_{<q}
        const auto Pq = G.cols();
        const int nq = lay.rows(q), fq = lay.cols(q);
        const auto offq = static_cast<Eigen::Index>(lay.offset(q));
        for (int j = 0; j < n; ++j)
          for (int c = 0; c < nq; ++c) {
            const double kc = K(j, c);
            if (kc == 0.0) continue;
            for (int d = 0; d < fq; ++d) {
              const Eigen::Index nu = offq + Eigen::Index(c) * fq + d;
              Bh[j].col(nu).head(Pq) = (kc * w[nu]) * G.row(d).transpose().cwiseProduct(w.head(Pq));
            }
          }
      }
      for (int j = 0; j < n; ++j) Bh[j] = (Bh[j] + Bh[j].transpose()).eval();  // mirror the lower-layer blocks
      Mat<double> ZB = Mat<double>::Zero(P, P);
      double bb = 0, zbb = 0, f3 = 0, f2 = 0;
      for (int j = 0; j < n; ++j) {
        const double b2 = Bh[j].squaredNorm();
        bb += b2;
        zbb += z[j] * z[j] * b2;
        ZB += z[j] * Bh[j];
        const Vec<double> aj = Ah.row(j).transpose();
        f3 += z[j] * aj.dot(Bh[j] * aj);
        f2 += aj.dot(Bh[j] * za);
      }
      s[Q::G4] = bb / dn;
      s[Q::G1] = zz * bb / (dn * dn);
      s[Q::G2] = ZB.squaredNorm() / (dn * dn);
      s[Q::G3] = zbb / dn;
      s[Q::F1] = ZB.cwiseProduct(Ah.transpose() * Ah).sum() / (dn * dn);
      s[Q::F2] = f2 / (dn * dn);
      s[Q::F3] = f3 / dn;
    }
    out.push_back(s);
  }
  return out;
}

std::vector<YEstimate> mc_estimate_all(const TheoryConfig& cfg, int max_layer, bool with_munu, int seeds, Rng& rng) {
  if (seeds < 2) throw ConfigError("mc_estimate: need >= 2 seeds");
  std::vector<std::vector<std::vector<double>>> vals(max_layer, std::vector<std::vector<double>>(kNumQuantities));
  for (int i = 0; i < seeds; ++i) {
    Rng r = rng.derive({static_cast<std::uint64_t>(i)});
    const auto ys = sample_y(cfg, max_layer, with_munu, r);
    for (int l = 0; l < max_layer; ++l)
      for (int q = 0; q < kNumQuantities; ++q)
        if (with_munu || q < kNumMuQuantities) vals[l][q].push_back(ys[l].y[q]);
  }
  std::vector<YEstimate> out(max_layer);
  for (int l = 0; l < max_layer; ++l) {
    out[l].layer = l + 1;
    for (int q = 0; q < kNumQuantities; ++q) out[l].q[q] = mean_std_err(vals[l][q]);
  }
  return out;
}

MeanStdErr mc_estimate_y(const TheoryConfig& cfg, int layer, Quantity which, int seeds, Rng& rng) {
  return mc_estimate_all(cfg, layer, !is_mu_family(which), seeds, rng)[layer - 1].q[static_cast<int>(which)];
}

}  // namespace milr
