#include <cmath>
#include <cstdio>

#include "milr/theory.hpp"

namespace milr {

namespace {

constexpr const char* kShort[kNumQuantities] = {"A",  "B",  "C",  "D",  "E1", "E2", "E3",
                                                "F1", "F2", "F3", "G1", "G2", "G3", "G4"};
constexpr const char* kLong[kNumQuantities] = {
    "Y[(d_mu z)^2]",          "Y[(d_mu z)^2,z^2]",         "Y[z d_mu z,z d_mu z]",
    "Y[(z d_mu z)^2]",        "Y[(d_mu z)^2,(d_nu z)^2]",  "Y[d_mu z d_nu z,d_mu z d_nu z]",
    "Y[(d_mu z d_nu z)^2]",   "Y[z d_munu z,d_mu z d_nu z]", "Y[z d_mu z,d_mu z d_munu z]",
    "Y[z d_munu z d_mu z d_nu z]", "Y[(d_munu z)^2,z^2]",  "Y[z d_munu z,z d_munu z]",
    "Y[(z d_munu z)^2]",      "Y[(d_munu z)^2]"};

}  // namespace

const char* short_name(Quantity q) { return kShort[static_cast<int>(q)]; }
const char* long_name(Quantity q) { return kLong[static_cast<int>(q)]; }
bool is_mu_family(Quantity q) { return static_cast<int>(q) < kNumMuQuantities; }
bool is_order_inv_n(Quantity q) {
  return q == Quantity::C || q == Quantity::E2 || q == Quantity::F1 || q == Quantity::F2 || q == Quantity::G2;
}

double TheoryConfig::eta_at(int l) const {
  if (eta.empty()) return 1.0;
  return eta[std::min<std::size_t>(static_cast<std::size_t>(l - 1), eta.size() - 1)];
}

void TheoryConfig::validate() const {
  if (widths.size() < 2) throw ConfigError("theory: need n_0 and at least one hidden width");
  for (int w : widths)
    if (w < 1) throw ConfigError("theory: widths must be >= 1");
  for (double e : eta)
    if (!(e >= 0) || !std::isfinite(e)) throw ConfigError("theory: learning rates must be finite and >= 0");
  if (eta.size() > widths.size()) throw ConfigError("theory: more rates than weight layers");
  if (x_norm_sq < 0 && x_norm_sq != -1) throw ConfigError("theory: x_norm_sq must be >= 0");
  if (moment_source == MomentSource::MonteCarlo && moment_mc_seeds < 2)
    throw ConfigError("theory: Monte-Carlo moments need >= 2 seeds");
}

TheoryConfig TheoryConfig::constant(int n0, int width, int depth, double eta) {
  TheoryConfig c;
  c.widths.assign(depth + 1, width);
  c.widths[0] = n0;
  c.eta.assign(depth + 1, eta);
  c.validate();
  return c;
}

NormMoments norm_moments(const TheoryConfig& cfg) {
  cfg.validate();
  const int L = cfg.depth();
  const double a0 = cfg.a0();
  NormMoments mom;
  mom.m1.assign(L + 2, a0);
  mom.m2.assign(L + 2, a0 * a0);
  if (cfg.moment_source == MomentSource::MonteCarlo) {
    ArchSpec arch;
    arch.n0 = cfg.widths[0];
    arch.hidden.assign(cfg.widths.begin() + 1, cfg.widths.end());
    std::vector<double> s1(L + 2, 0.0), s2(L + 2, 0.0);
    Rng rng(cfg.moment_mc_seed);
    for (int i = 0; i < cfg.moment_mc_seeds; ++i) {
      Rng r = rng.derive({static_cast<std::uint64_t>(i)});
      auto net = init_network<double>(arch, InitScheme::Kaiming, r);
      Vec<double> x = gaussian_vector<double>(arch.n0, r);
      x *= std::sqrt(a0 * arch.n0) / x.norm();
      auto tr = forward(net, x);
      for (int l = 1; l <= L + 1; ++l) {
        const double s = tr.z(l).cwiseMax(0.0).squaredNorm() / tr.z(l).rows();
        s1[l] += s;
        s2[l] += s * s;
      }
    }
    for (int l = 1; l <= L + 1; ++l) {
      mom.m1[l] = s1[l] / cfg.moment_mc_seeds;
      mom.m2[l] = s2[l] / cfg.moment_mc_seeds;
    }
    return mom;
  }
  const double c = cfg.moment_source == MomentSource::ClosedForm ? 5.0 : 2.0;
  for (int l = 1; l <= L + 1; ++l) mom.m2[l] = mom.m2[l - 1] * (1.0 + c / cfg.width(l));
  return mom;
}

YState recurse_y_mu(const TheoryConfig& cfg, const NormMoments& mom, const YState& prev) {
  using Q = Quantity;
  const int l = prev.layer;
  const double n = cfg.width(l), m = cfg.width(l + 1);
  const double e2 = cfg.eta_at(l + 1) * cfg.eta_at(l + 1);
  const double M1 = mom.m1[l], M2 = mom.m2[l];
  const double Bn = prev[Q::B] + prev[Q::D] / n, Cn = prev[Q::C] + prev[Q::D] / n;
  YState s;
  s.layer = l + 1;
  s.M1 = mom.m1[l + 1];
  s.M2 = mom.m2[l + 1];
  if (cfg.form == RecursionForm::Exact) {
    s[Q::A] = prev[Q::A] + e2 * M1;
    s[Q::B] = Bn + (2.0 / m) * Cn + 2.0 * e2 * M2;
  } else {
    s[Q::A] = prev[Q::A] + 0.5 * e2 * cfg.a0();
    s[Q::B] = Bn + (2.0 / m) * Cn + e2 * M2;
  }
  s[Q::C] = (1.0 + 1.0 / m) * Cn + (1.0 / m) * Bn + (2.0 / m) * e2 * M2;
  s[Q::D] = Bn + 2.0 * Cn + 2.0 * e2 * M2;
  return s;
}

void recurse_y_munu(const TheoryConfig& cfg, const NormMoments& mom, const YState& prev, YState& s) {
  using Q = Quantity;
  if (cfg.form != RecursionForm::Exact)
    throw ConfigError("theory: the two-weight family is only available in exact form");
  const int l = prev.layer;
  const double n = cfg.width(l), m = cfg.width(l + 1);
  const double e2 = cfg.eta_at(l + 1) * cfg.eta_at(l + 1), e4 = e2 * e2;
  const double M2 = mom.m2[l];
  const double Bn = prev[Q::B] + prev[Q::D] / n, Cn = prev[Q::C] + prev[Q::D] / n;
  const double E1 = prev[Q::E1], E2 = prev[Q::E2], E3 = prev[Q::E3];
  const double F1 = prev[Q::F1], F2 = prev[Q::F2], F3 = prev[Q::F3];
  const double G1 = prev[Q::G1], G2 = prev[Q::G2], G3 = prev[Q::G3], G4 = prev[Q::G4];
  const double im = 1.0 / m, in = 1.0 / n;
  s[Q::E1] = E1 + E3 * in + 2.0 * im * (E2 + E3 * in) + e4 * M2 + e2 * Bn;
  s[Q::E2] = (1.0 + im) * (E2 + E3 * in) + im * (E1 + E3 * in) + e4 * M2 * im + e2 * im * Bn;
  s[Q::E3] = E1 + 2.0 * E2 + 3.0 * E3 * in + e4 * M2 + e2 * Bn;
  s[Q::F1] = F1 + 2.0 * im * F2 + in * (1.0 + 2.0 * im) * F3 + e2 * im * Cn;
  s[Q::F2] = (1.0 + im) * F2 + im * F1 + in * (1.0 + 2.0 * im) * F3 + 0.5 * e2 * (1.0 + im) * Cn;
  s[Q::F3] = F1 + 2.0 * F2 + 3.0 * F3 * in + e2 * Cn;
  s[Q::G1] = G1 + G3 * in + 2.0 * im * (G2 + G3 * in) + e2 * Bn;
  s[Q::G2] = (1.0 + im) * G2 + im * G1 + in * (1.0 + 2.0 * im) * G3 + e2 * im * Bn;
  s[Q::G3] = G1 + 2.0 * G2 + 3.0 * G3 * in + e2 * Bn;
  s[Q::G4] = G4 + e2 * prev[Q::A];
}

namespace {

YState step(const TheoryConfig& cfg, const NormMoments& mom, const YState& prev) {
  YState s = recurse_y_mu(cfg, mom, prev);
  if (cfg.form == RecursionForm::Exact) recurse_y_munu(cfg, mom, prev, s);
  return s;
}

}  // namespace

// Layer 1 is one recursion step from the empty state at layer 0 (sigma^(0) = x):
// every derivative-carrying quantity vanishes there, so only the additive terms survive.
YState y_base_case(const TheoryConfig& cfg, const NormMoments& mom) { return step(cfg, mom, YState{}); }

YState y_base_case(const TheoryConfig& cfg) { return y_base_case(cfg, norm_moments(cfg)); }

RecursionState run_recursion(const TheoryConfig& cfg) {
  const NormMoments mom = norm_moments(cfg);
  RecursionState out;
  YState s{};
  for (int l = 1; l <= cfg.depth() + 1; ++l) {
    s = step(cfg, mom, s);
    out.push_back(s);
  }
  return out;
}

double closed_form_A(const TheoryConfig& cfg, int layer) {
  double sum = 0;
  for (int k = 1; k <= layer; ++k) sum += cfg.eta_at(k) * cfg.eta_at(k);
  return (cfg.form == RecursionForm::Exact ? 1.0 : 0.5) * cfg.a0() * sum;
}

double closed_form_B_leading(const TheoryConfig& cfg, const NormMoments& mom, int layer) {
  double sum = 0;
  for (int k = 1; k <= layer; ++k) sum += cfg.eta_at(k) * cfg.eta_at(k) * mom.m2[k - 1];
  return 2.0 * sum;
}

double heff_from_state(const YState& o) {
  using Q = Quantity;
  return o[Q::E3] + 2.0 * o[Q::F3] + o[Q::G3] + o[Q::G4];
}

double heff_large_width(int L, double eta, double a0) {
  const double l = L, e4 = eta * eta * eta * eta;
  return e4 * (a0 * a0 * (l + 1) * (l + 1) + a0 * a0 * l * (l + 1) + 0.5 * a0 * l * (l + 1));
}

double h_frob_large_size(double n, double L) { return n * n * heff_large_width(static_cast<int>(L), 1.0); }

LambdaBounds lambda1_bounds(double frob_mean, int /*n*/, int L, InitScheme scheme) {
  if (!(frob_mean >= 0)) throw ConfigError("lambda1_bounds: Frobenius mean must be >= 0");
  LambdaBounds b;
  b.lecun_factor = scheme == InitScheme::LeCun ? std::pow(2.0, -0.5 * L) : 1.0;
  b.lambda1_upper = b.lecun_factor * std::sqrt(frob_mean);
  b.inv_sharpness_lower = b.lambda1_upper > 0 ? 2.0 / b.lambda1_upper : INFINITY;
  return b;
}

TheoryPrediction heff_prediction(const TheoryConfig& cfg) {
  if (cfg.form != RecursionForm::Exact) throw ConfigError("heff_prediction requires the exact recursion form");
  TheoryPrediction p;
  const int L = cfg.depth();
  p.heff_frob_sq = heff_from_state(run_recursion(cfg).back());
  p.heff_leading_order = heff_large_width(L, cfg.eta_at(1), cfg.a0());
  p.quarter_l2_form = cfg.eta_at(1) * cfg.eta_at(1) * L * L / 4.0;
  TheoryConfig raw = cfg;
  raw.eta.clear();
  for (int l = 1; l <= L + 1; ++l) raw.eta.push_back(std::sqrt(cfg.width(l - 1)));
  p.h_frob_sq = heff_from_state(run_recursion(raw).back());
  const double n = cfg.widths.back();
  p.h_frob_sq_scaled = p.h_frob_sq / (n * n * L * L);
  const LambdaBounds b = lambda1_bounds(p.heff_frob_sq, static_cast<int>(n), L, InitScheme::Kaiming);
  p.lambda1_upper = b.lambda1_upper;
  p.inv_sharpness_lower = b.inv_sharpness_lower;
  p.lecun_factor = std::pow(2.0, -0.5 * L);
  return p;
}

double z_score(double rec, const MeanStdErr& mc) {
  const double se = std::max(mc.std_err, 1e-10 * std::max(1.0, std::abs(rec)));
  return (mc.mean - rec) / se;
}

std::string theory_report_csv(const RecursionState& rec, const std::vector<YEstimate>& mc) {
  std::string out = "layer,quantity,recursion,mc_mean,mc_std_err,z\n";
  char buf[256];
  for (const auto& e : mc) {
    const YState& r = rec[e.layer - 1];
    for (int q = 0; q < kNumQuantities; ++q) {
      if (e.q[q].count == 0) continue;
      std::snprintf(buf, sizeof buf, "%d,%s,%.17g,%.17g,%.17g,%.6f\n", e.layer, kShort[q], r.y[q], e.q[q].mean,
                    e.q[q].std_err, z_score(r.y[q], e.q[q]));
      out += buf;
    }
  }
  return out;
}

}  // namespace milr
