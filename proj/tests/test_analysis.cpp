#include <cmath>

#include "doctest.h"
#include "milr/analysis.hpp"
#include "milr/config.hpp"

using namespace milr;

TEST_CASE("log-log fit examples") {
  std::vector<double> x, y;
  for (double v : {1.0, 2.0, 5.0, 10.0, 40.0}) {
    x.push_back(v);
    y.push_back(std::exp(-0.7 * std::log(v) + 1));
  }
  auto f = fit_loglog(x, y);
  CHECK(f.alpha() == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(1).epsilon(1e-12));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.n_points == 5);

  auto c = fit_loglog({1, 2, 3}, {4, 4, 4});
  CHECK(c.slope == 0);
  CHECK(c.r_squared == 0);

  try {
    fit_loglog({1, 2, 3, 4}, {1, 2, -1, 3});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("index 2") != std::string::npos);
  }
  CHECK_THROWS_AS(fit_loglog({1, 2}, {1, 2}), DataError);
}

TEST_CASE("two-point OLS is exact") {
  Rng r(3);
  for (int i = 0; i < 50; ++i) {
    const double x0 = r.uniform(-5, 5), x1 = x0 + r.uniform(0.1, 3), y0 = r.normal(), y1 = r.normal();
    auto f = fit_ols({x0, x1}, {y0, y1});
    const double slope = (y1 - y0) / (x1 - x0);
    CHECK(f.slope == doctest::Approx(slope).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(y0 - slope * x0).epsilon(1e-10));
    CHECK(f.r_squared == doctest::Approx(1.0));
  }
}

TEST_CASE("sweep plan and csv") {
  SweepPlan p;
  p.depths = {3, 5, 7};
  p.width_ratios = {2, 4};
  p.seeds_per_arch = 5;
  p.thresholds = {0.9};
  CHECK(p.architectures().size() == 6);
  p.validate();
  p.thresholds.clear();
  CHECK_THROWS_AS(p.validate(), ConfigError);

  std::vector<SweepRow> rows;
  for (auto [d, w] : p.architectures())
    for (int s = 0; s < 5; ++s) {
      SweepRow r;
      r.depth = d;
      r.width = w;
      r.seed = s;
      r.t_used = 0.9;
      r.found = s % 3 != 0;
      if (r.found) r.eta_star = 0.1 / (d * w) * (1 + s / 7.0);
      r.lambda1_init = 3.0 + d + 1.0 / 3;
      r.two_over_lambda1 = 2.0 / r.lambda1_init;
      if (s == 4 && d == 7) r.error = "probe failed; non-finite";
      rows.push_back(r);
    }
  auto t = sweep_table(rows, {{"k", "v"}});
  const std::string text = to_csv(t);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 1 + 30);
  auto back = parse_sweep_table(parse_csv(text));
  CHECK(back == rows);
  CHECK(parse_csv(text).config == ConfigHeader{{"k", "v"}});
}

TEST_CASE("fits table and power-law fits on synthetic rows") {
  std::vector<SweepRow> rows;
  for (int d : {2, 4, 8})
    for (int w : {16, 32})
      for (int s = 0; s < 3; ++s) {
        SweepRow r;
        r.depth = d;
        r.width = w;
        r.seed = s;
        r.t_used = 0.5;
        r.found = true;
        r.eta_star = 3.0 * std::pow(double(d) * w, -0.6) * (1 + 0.01 * s);
        r.lambda1_init = 1.0;
        r.two_over_lambda1 = 2.0 * std::pow(*r.eta_star, 1.3);
        rows.push_back(r);
      }
  auto f = fit_sweep(rows, 0.5);
  CHECK(f.found_rows == 18);
  CHECK(f.eta_per_arch.alpha() == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(f.eta_per_arch.n_points == 6);
  CHECK(f.beta_per_seed.slope == doctest::Approx(1.3).epsilon(1e-9));
  CHECK(f.frac_above_two_over_lambda == 0.0);  // 2 eta^1.3 > eta for these eta values
  auto t = fits_table(f, {});
  CHECK(t.rows.size() == 4);
  CHECK(t.header == std::vector<std::string>{"fit", "slope", "intercept", "r_squared", "n_points"});
}

TEST_CASE("threshold stability") {
  std::vector<SweepRow> rows;
  for (double t : {0.2, 0.8})
    for (int s = 0; s < 3; ++s) {
      SweepRow r;
      r.depth = 2;
      r.width = 64;
      r.seed = s;
      r.t_used = t;
      r.found = true;
      r.eta_star = t == 0.2 ? 0.5 : 0.25;
      rows.push_back(r);
    }
  auto st = threshold_stability(rows, 0.2, 0.8);
  CHECK(st.pairs == 3);
  CHECK(st.mean_ratio == 2);
  CHECK(threshold_stability(rows, 0.2, 0.8, 64).pairs == 0);
}

TEST_CASE("small sweep end to end is deterministic") {
  GaussianSpec g;
  g.d = 8;
  g.per_class_train = 100;
  g.per_class_val = 50;
  auto ds = gen_gaussian(g);
  SweepPlan p;
  p.depths = {1, 2};
  p.width_ratios = {4};
  p.seeds_per_arch = 2;
  p.thresholds = {0.8, 0.95};
  p.milr.s = 3;
  p.milr.e = 2;
  p.train.batch_size = 32;
  p.lambda_batch = 64;
  p.master_seed = 5;
  int streamed = 0;
  auto a = run_sweep(p, ds, [&](const SweepRow&) { ++streamed; });
  CHECK(a.size() == 8);
  CHECK(streamed == 8);
  p.threads = 3;
  auto b = run_sweep(p, ds);
  CHECK(to_csv(sweep_table(a, p.describe())) == to_csv(sweep_table(b, p.describe())));
  for (std::size_t i = 1; i < a.size(); ++i)
    CHECK(std::tie(a[i - 1].depth, a[i - 1].width, a[i - 1].seed, a[i - 1].t_used) <
          std::tie(a[i].depth, a[i].width, a[i].seed, a[i].t_used));
  for (const auto& r : a) {
    CHECK(r.error.empty());
    CHECK(r.two_over_lambda1 == doctest::Approx(2 / std::abs(r.lambda1_init)));
  }
}

TEST_CASE("eos structure") {
  GaussianSpec g;
  g.d = 5;
  g.per_class_train = 40;
  g.per_class_val = 5;
  auto ds = gen_gaussian(g);
  GdConfig c;
  c.steps = 20;
  c.probe_interval = 5;
  auto runs = eos_experiment(ArchSpec::constant(5, 8, 2, 2), InitScheme::Kaiming, {2.0 / 20, 2.0 / 50, 2.0 / 80, 2.0 / 110},
                             ds, c, 1);
  CHECK(runs.size() == 4);
  for (const auto& r : runs) {
    auto pr = r.traj.probes();
    REQUIRE(pr.size() == 4);
    for (std::size_t i = 0; i < pr.size(); ++i) CHECK(pr[i].step == 5 * int(i + 1));
  }
  auto t = eos_table(runs, {});
  CHECK(t.rows.size() == 4 * 21);
}

TEST_CASE("key-value config") {
  auto c = KeyValueConfig::parse("# comment\nseed = 5\ndepths = 5 10 15\n  lr=0.25 # trailing\nflag = true\n");
  CHECK(c.get("seed", 0) == 5);
  CHECK(c.get_ints("depths", {}) == std::vector<int>{5, 10, 15});
  CHECK(c.get("lr", 0.0) == 0.25);
  CHECK(c.get("flag", false));
  CHECK(c.get("absent", 7) == 7);
  c.check_all_used();
  auto bad = KeyValueConfig::parse("seed = 5\ntypo = 1\n");
  bad.get("seed", 0);
  CHECK_THROWS_AS(bad.check_all_used(), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("no equals sign"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("a = 1\na = 2"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("x = abc").get("x", 1.0), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::load("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("csv number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3, 1e-300, -2.5e17, 0.0}) CHECK(parse_double(fmt(v)) == v);
  CHECK(std::isnan(parse_double(fmt(std::nan("")))));
  CHECK_THROWS_AS(parse_double("1.5x"), DataError);
  CsvTable t;
  t.header = {"a"};
  t.rows = {{"x,y"}};
  CHECK_THROWS_AS(to_csv(t), DataError);
}
