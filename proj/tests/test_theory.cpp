#include <algorithm>
#include <cmath>
#include <string>

#include "doctest.h"
#include "milr/theory.hpp"

using namespace milr;
using Q = Quantity;

TEST_CASE("base case at layer 1") {
  auto cfg = TheoryConfig::constant(8, 8, 3);
  auto y1 = y_base_case(cfg);
  CHECK(y1.layer == 1);
  CHECK(y1[Q::A] == doctest::Approx(1.0).epsilon(1e-15));  // ||x||^2 / n0
  CHECK(y1[Q::B] == doctest::Approx(2.0));                // E z^2 = 2 ||x||^2 / n0
  CHECK(y1[Q::G4] == 0);

  cfg.x_norm_sq = 0;  // zero input
  auto z = y_base_case(cfg);
  for (Q q : {Q::A, Q::B, Q::C, Q::D, Q::E1, Q::E2, Q::E3}) CHECK(z[q] == 0);

  auto e0 = TheoryConfig::constant(8, 8, 3, 1.0);
  e0.eta = {0.0, 1.0};
  auto y = y_base_case(e0);
  for (Q q : {Q::A, Q::B, Q::C, Q::D}) CHECK(y[q] == 0);
}

TEST_CASE("base case agrees with sampling at layer 1 and 2") {
  auto cfg = TheoryConfig::constant(8, 8, 2);
  auto rec = run_recursion(cfg);
  Rng r(5);
  auto mc = mc_estimate_all(cfg, 2, true, 3000, r);
  for (int l = 0; l < 2; ++l)
    for (int q = 0; q < kNumQuantities; ++q) {
      CAPTURE(l + 1);
      CAPTURE(std::string(short_name(static_cast<Q>(q))));
      CHECK(std::abs(z_score(rec[l].y[q], mc[l].q[q])) < 3);
    }
}

TEST_CASE("half-strength single-weight forms") {
  auto cfg = TheoryConfig::constant(16, 16, 5, 0.3);
  cfg.form = RecursionForm::HalfStrength;
  auto rec = run_recursion(cfg);
  CHECK(rec[0][Q::A] == doctest::Approx(0.5 * 0.09));
  for (int l = 1; l < 5; ++l) CHECK(rec[l][Q::A] == doctest::Approx(rec[l - 1][Q::A] + 0.09 / 2).epsilon(1e-14));
  auto ex = TheoryConfig::constant(16, 16, 5, 0.1);
  ex.form = RecursionForm::HalfStrength;
  CHECK(closed_form_A(ex, 4) == doctest::Approx(0.02).epsilon(1e-14));
  CHECK(run_recursion(ex)[3][Q::A] == doctest::Approx(0.02).epsilon(1e-14));
  // the exact form doubles the additive constant
  ex.form = RecursionForm::Exact;
  CHECK(run_recursion(ex)[3][Q::A] == doctest::Approx(0.04).epsilon(1e-14));
  CHECK_THROWS_AS(heff_prediction(cfg), ConfigError);
}

TEST_CASE("closed forms match the iterated recursion") {
  for (auto form : {RecursionForm::Exact, RecursionForm::HalfStrength}) {
    auto cfg = TheoryConfig::constant(1000000, 1000000, 6, 0.7);
    cfg.eta = {0.7, 1.3, 0.2, 0.9, 1.1, 0.5, 1.0};
    cfg.form = form;
    auto rec = run_recursion(cfg);
    for (int l = 1; l <= 6; ++l) CHECK(std::abs(rec[l - 1][Q::A] / closed_form_A(cfg, l) - 1) < 1e-12);
  }
  auto cfg = TheoryConfig::constant(1000000, 1000000, 6, 1.0);
  auto mom = norm_moments(cfg);
  auto rec = run_recursion(cfg);
  for (int l = 1; l <= 6; ++l) CHECK(std::abs(rec[l - 1][Q::B] / closed_form_B_leading(cfg, mom, l) - 1) < 1e-4);
}

TEST_CASE("finite-width corrections vanish") {
  // hidden layers of width n (the scalar output layer has width 1)
  auto a = run_recursion(TheoryConfig::constant(10000, 10000, 2));
  auto b = run_recursion(TheoryConfig::constant(100000000, 100000000, 2));
  for (int l : {0, 1})
    for (Q q : {Q::A, Q::B, Q::D}) {
      CAPTURE(l);
      CAPTURE(std::string(short_name(q)));
      CHECK(std::abs(a[l][q] / b[l][q] - 1) < 1e-3);
    }
}

TEST_CASE("second-derivative norm recursion") {
  auto cfg = TheoryConfig::constant(12, 9, 4, 1.0);
  cfg.eta = {1.0, 0.5, 2.0, 1.5, 0.8};
  auto rec = run_recursion(cfg);
  for (int l = 1; l < 5; ++l) {
    const double e = cfg.eta_at(l + 1);
    CHECK(rec[l][Q::G4] == doctest::Approx(e * e * rec[l - 1][Q::A] + rec[l - 1][Q::G4]).epsilon(1e-15));
  }
}

TEST_CASE("order 1/n quantities") {
  auto lo = run_recursion(TheoryConfig::constant(1000, 1000, 4));
  auto hi = run_recursion(TheoryConfig::constant(10000, 10000, 4));
  for (Q q : {Q::C, Q::E2, Q::F2, Q::G2}) {
    CAPTURE(std::string(short_name(q)));
    CHECK(is_order_inv_n(q));
    const double ratio = lo[3][q] / hi[3][q];
    CHECK(ratio >= 8);
    CHECK(ratio <= 12);
  }
  auto n2 = run_recursion(TheoryConfig::constant(100, 100, 4));
  auto n3 = run_recursion(TheoryConfig::constant(1000, 1000, 4));
  CHECK(n3[3][Q::G2] <= 10 * n2[3][Q::G2] * 100.0 / 1000.0);
  for (Q q : {Q::A, Q::B, Q::E3, Q::G4}) CHECK_FALSE(is_order_inv_n(q));
}

TEST_CASE("z d_munu z against d_mu z d_nu z shrinks tenfold per tenfold width") {
  auto lo = run_recursion(TheoryConfig::constant(1000, 1000, 4));
  auto hi = run_recursion(TheoryConfig::constant(10000, 10000, 4));
  CHECK(is_order_inv_n(Q::F1));
  const double ratio = lo[3][Q::F1] / hi[3][Q::F1];
  CHECK(ratio >= 8);
  CHECK(ratio <= 12);
}

TEST_CASE("zero rates give zero two-weight quantities") {
  auto cfg = TheoryConfig::constant(8, 8, 3, 0.0);
  for (const auto& s : run_recursion(cfg))
    for (double v : s.y) CHECK(v == 0);
}

TEST_CASE("minimal depth closed value") {
  // one hidden layer, unit rates and input norm: 7 + 22/n
  for (int n : {4, 16, 100}) {
    auto p = heff_prediction(TheoryConfig::constant(n, n, 1));
    CHECK(p.heff_frob_sq == doctest::Approx(7.0 + 22.0 / n).epsilon(1e-13));
  }
}

TEST_CASE("large-width value of the effective Hessian norm") {
  auto p = heff_prediction(TheoryConfig::constant(10000000, 10000000, 10));
  CHECK(p.quarter_l2_form == 25);
  CHECK(heff_large_width(10, 1.0) == 286);
  CHECK(p.heff_leading_order == 286);
  CHECK(std::abs(p.heff_frob_sq / 286 - 1) < 1e-4);
  CHECK(heff_large_width(3, 1.0) == doctest::Approx(2.5 * 9 + 3.5 * 3 + 1));
}

TEST_CASE("effective Hessian prediction vs dense sampling") {
  const int n = 8, L = 3;
  auto cfg = TheoryConfig::constant(n, n, L);
  auto pred = heff_prediction(cfg);
  FrobeniusConfig fc;
  fc.kind = HessianKind::Effective;
  fc.eta_per_layer.assign(L + 1, 1.0);
  fc.seeds = 500;
  Rng r(2024);
  auto st = frobenius_sq_mc(ArchSpec::constant(n, n, L, 1), InitScheme::Kaiming, fc, r);
  CHECK(st.rows[0].probes == 0);
  CHECK(std::abs(st.mean - pred.heff_frob_sq) < 3 * st.std_err);

  FrobeniusConfig raw;
  raw.seeds = 500;
  Rng r2(2025);
  auto sr = frobenius_sq_mc(ArchSpec::constant(n, n, L, 1), InitScheme::Kaiming, raw, r2);
  CHECK(std::abs(sr.mean - pred.h_frob_sq) < 3 * sr.std_err);
}

TEST_CASE("bounds") {
  auto b = lambda1_bounds(100, 32, 4, InitScheme::Kaiming);
  CHECK(b.lambda1_upper == 10);
  CHECK(b.inv_sharpness_lower == doctest::Approx(0.2));
  CHECK(lambda1_bounds(100, 32, 6, InitScheme::LeCun).lecun_factor == 0.125);
  CHECK_THROWS_AS(lambda1_bounds(-1, 32, 4, InitScheme::Kaiming), ConfigError);
}

TEST_CASE("large-size form scales as n^2 L^2") {
  auto slope = [](double f0, double f1, double x0, double x1) { return std::log(f1 / f0) / std::log(x1 / x0); };
  CHECK(std::abs(slope(h_frob_large_size(1e6, 1e7), h_frob_large_size(2e6, 1e7), 1e6, 2e6) - 2) < 1e-6);
  CHECK(std::abs(slope(h_frob_large_size(1e6, 1e7), h_frob_large_size(1e6, 2e7), 1e7, 2e7) - 2) < 1e-6);
}

TEST_CASE("norm moments") {
  auto cfg = TheoryConfig::constant(20, 20, 3);
  auto cf = norm_moments(cfg);
  CHECK(cf.m2[3] == doctest::Approx(std::pow(1.25, 3)));
  cfg.moment_source = MomentSource::TwoOverNProduct;
  CHECK(norm_moments(cfg).m2[3] == doctest::Approx(std::pow(1.1, 3)));
  cfg.moment_source = MomentSource::MonteCarlo;
  cfg.moment_mc_seeds = 20000;
  auto mc = norm_moments(cfg);
  for (int l = 1; l <= 3; ++l) {
    CHECK(mc.m1[l] == doctest::Approx(cf.m1[l]).epsilon(0.02));
    CHECK(mc.m2[l] == doctest::Approx(cf.m2[l]).epsilon(0.03));
  }
}

TEST_CASE("ReLU second moment is half the pre-activation second moment") {
  // sigma(z)^2 = z^2 1{z > 0}; with symmetric z the two estimators agree
  Rng master(3);
  double a = 0, b = 0, a2 = 0;
  const int seeds = 4000;
  for (int s = 0; s < seeds; ++s) {
    Rng r = master.derive({static_cast<std::uint64_t>(s)});
    auto net = init_network<double>(ArchSpec::constant(10, 10, 2, 1), InitScheme::Kaiming, r);
    Vec<double> x = gaussian_vector<double>(10, r);
    auto tr = forward(net, x);
    const double u = tr.a(2).squaredNorm() / 10, v = 0.5 * tr.z(2).squaredNorm() / 10;
    a += u;
    b += v;
    a2 += (u - v) * (u - v);
  }
  const double d = (a - b) / seeds, se = std::sqrt(a2 / seeds - d * d) / std::sqrt(seeds - 1.0);
  CHECK(std::abs(d) < 3 * se);
}

TEST_CASE("per-layer rates enter additively") {
  // A is a sum over layers of eta_l^2 times a layer term; zeroing a layer removes exactly its share
  auto all = TheoryConfig::constant(6, 6, 3);
  auto first = all, rest = all;
  first.eta = {1, 0, 0, 0};
  rest.eta = {0, 1, 1, 1};
  for (int s = 0; s < 5; ++s) {
    Rng r1(s), r2(s), r3(s);
    auto ya = sample_y(all, 3, false, r1), yf = sample_y(first, 3, false, r2), yr = sample_y(rest, 3, false, r3);
    for (int l = 0; l < 3; ++l) CHECK(ya[l][Q::A] == doctest::Approx(yf[l][Q::A] + yr[l][Q::A]).epsilon(1e-12));
  }
}

TEST_CASE("report csv") {
  auto cfg = TheoryConfig::constant(6, 6, 2);
  Rng r(1);
  auto mc = mc_estimate_all(cfg, 2, false, 50, r);
  auto csv = theory_report_csv(run_recursion(cfg), mc);
  CHECK(csv.rfind("layer,quantity,recursion,mc_mean,mc_std_err,z\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 4);
  Rng r2(1);
  auto one = mc_estimate_y(cfg, 2, Q::B, 50, r2);
  CHECK(one.mean == mc[1].q[1].mean);
  CHECK_THROWS_AS(mc_estimate_all(cfg, 2, false, 1, r), ConfigError);
}
