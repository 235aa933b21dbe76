#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "milr/network.hpp"
#include "milr/sharpness.hpp"

namespace milr {

// Moments of s_l = (1/n_l)||sigma^(l)||^2 feeding the recursions (sigma^(0) = x).
//   ClosedForm:        E s_l = a0,  E s_l^2 = a0^2 prod_{k<=l} (1 + 5/n_k)   (exact for Kaiming)
//   TwoOverNProduct:   E s_l^2 = a0^2 prod_{k<=l} (1 + 2/n_k)   (a cruder product, kept for comparison)
//   MonteCarlo:        sampled from Kaiming forward passes
enum class MomentSource { ClosedForm, TwoOverNProduct, MonteCarlo };

// Exact: recursions re-derived for Kaiming weights (variance 2/fan-in), every
// coefficient checked against brute-force sampling.
// HalfStrength: the single-weight family with half-strength additive terms (the
// bookkeeping of a variance-1 convention); only available for the A..D quantities.
enum class RecursionForm { Exact, HalfStrength };

struct TheoryConfig {
  std::vector<int> widths;   // n_0, n_1..n_L (the scalar output layer is implicit)
  std::vector<double> eta;   // eta^(1)..eta^(L+1); a shorter vector is padded with its last entry
  double x_norm_sq = -1;     // default n_0
  MomentSource moment_source = MomentSource::ClosedForm;
  RecursionForm form = RecursionForm::Exact;
  int moment_mc_seeds = 4000;
  std::uint64_t moment_mc_seed = 0;

  int depth() const { return static_cast<int>(widths.size()) - 1; }
  // n_l for l = 0..L+1 with n_{L+1} = 1
  double width(int l) const { return l <= depth() ? widths[l] : 1.0; }
  double eta_at(int l) const;  // eta^(l), l = 1..L+1
  double a0() const { return (x_norm_sq < 0 ? widths[0] : x_norm_sq) / widths[0]; }
  void validate() const;

  static TheoryConfig constant(int n0, int width, int depth, double eta = 1.0);
};

// Y-quantities at one layer. Short names follow the implementation's bookkeeping:
//   A  = Y[(d_mu z)^2]            B  = Y[(d_mu z)^2, z^2]
//   C  = Y[z d_mu z, z d_mu z]    D  = Y[(z d_mu z)^2]
//   E1 = Y[(d_mu z)^2, (d_nu z)^2]            E2 = Y[d_mu z d_nu z, d_mu z d_nu z]
//   E3 = Y[(d_mu z d_nu z)^2]
//   F1 = Y[z d_munu z, d_mu z d_nu z]         F2 = Y[z d_mu z, d_mu z d_munu z]
//   F3 = Y[z d_munu z d_mu z d_nu z]
//   G1 = Y[(d_munu z)^2, z^2]    G2 = Y[z d_munu z, z d_munu z]
//   G3 = Y[(z d_munu z)^2]       G4 = Y[(d_munu z)^2]
// plus the norm moments M1 = E s_l and M2 = E s_l^2 at the same layer.
enum class Quantity { A, B, C, D, E1, E2, E3, F1, F2, F3, G1, G2, G3, G4 };
constexpr int kNumQuantities = 14;
constexpr int kNumMuQuantities = 4;
const char* short_name(Quantity q);
const char* long_name(Quantity q);
bool is_mu_family(Quantity q);
// Quantities that vanish like 1/n at fixed depth.
bool is_order_inv_n(Quantity q);

struct YState {
  int layer = 0;
  std::array<double, kNumQuantities> y{};
  double M1 = 0, M2 = 0;

  double& operator[](Quantity q) { return y[static_cast<int>(q)]; }
  double operator[](Quantity q) const { return y[static_cast<int>(q)]; }
};

using RecursionState = std::vector<YState>;  // entry l-1 holds layer l = 1..L+1

// Norm moments E s_l, E s_l^2 for l = 0..L (index l).
struct NormMoments {
  std::vector<double> m1, m2;
};
NormMoments norm_moments(const TheoryConfig& cfg);

YState y_base_case(const TheoryConfig& cfg, const NormMoments& mom);
YState y_base_case(const TheoryConfig& cfg);
// Single-weight family at layer l+1 from layer l.
YState recurse_y_mu(const TheoryConfig& cfg, const NormMoments& mom, const YState& prev);
// Two-weight family at layer l+1, written into `next`; reads layer-l values only.
void recurse_y_munu(const TheoryConfig& cfg, const NormMoments& mom, const YState& prev, YState& next);
// All layers 1..L+1 (the last one is the scalar output).
RecursionState run_recursion(const TheoryConfig& cfg);

// Closed forms for the single-weight family obtained by summing the additive terms.
double closed_form_A(const TheoryConfig& cfg, int layer);
// Leading order of B (exact form): 2 sum_k (eta^(k))^2 E s_{k-1}^2; differs from the recursion by O(1/n).
double closed_form_B_leading(const TheoryConfig& cfg, const NormMoments& mom, int layer);

struct TheoryPrediction {
  double heff_frob_sq = 0;        // E ||H_eff||_F^2 at the configured widths
  double heff_leading_order = 0;  // n -> infinity limit at constant eta (first entry)
  double quarter_l2_form = 0;     // eta^2 L^2 / 4, the half-strength leading order (for comparison)
  double h_frob_sq = 0;           // E ||H||_F^2 (eta_hat = 1)
  double h_frob_sq_scaled = 0;    // h_frob_sq / (n_L^2 L^2), the n^2 L^2 constant at this size
  double lambda1_upper = 0;
  double inv_sharpness_lower = 0;
  double lecun_factor = 1;
};

// E ||H_eff||_F^2 = E3 + 2 F3 + G3 + G4 at the scalar output (y ~ N(0,1) independent).
double heff_from_state(const YState& out);
TheoryPrediction heff_prediction(const TheoryConfig& cfg);

// n -> infinity value of E ||H_eff||_F^2 for constant eta:
//   eta^4 [a0^2 (L+1)^2 + a0^2 L (L+1) + a0 L (L+1) / 2]
double heff_large_width(int L, double eta, double a0 = 1.0);
// n^2 * heff_large_width(L, 1): large-size form of E ||H||_F^2 (eta_hat = 1, n0 = n).
double h_frob_large_size(double n, double L);

struct LambdaBounds {
  double lambda1_upper = 0;
  double inv_sharpness_lower = 0;
  double lecun_factor = 1;
};
LambdaBounds lambda1_bounds(double frob_mean, int n, int L, InitScheme scheme);

// ---- brute-force oracles ----

// All fourteen quantities for one Kaiming draw, layers 1..max_layer (hidden layers).
// Two-weight quantities are skipped (left 0) when with_munu is false.
std::vector<YState> sample_y(const TheoryConfig& cfg, int max_layer, bool with_munu, Rng& rng);

struct YEstimate {
  int layer = 0;
  std::array<MeanStdErr, kNumQuantities> q{};
};
std::vector<YEstimate> mc_estimate_all(const TheoryConfig& cfg, int max_layer, bool with_munu, int seeds, Rng& rng);
MeanStdErr mc_estimate_y(const TheoryConfig& cfg, int layer, Quantity which, int seeds, Rng& rng);

// (mc - rec) / std_err, with std_err floored at 1e-10 * max(1, |rec|) so quantities that
// are deterministic for every draw are compared to within rounding instead of dividing by ~0.
double z_score(double rec, const MeanStdErr& mc);

// Per-layer report: layer,quantity,recursion,mc_mean,mc_std_err,z
std::string theory_report_csv(const RecursionState& rec, const std::vector<YEstimate>& mc);

}  // namespace milr
