#include "milr/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>

namespace milr {

const char* to_string(LrPolicy p) {
  switch (p) {
    case LrPolicy::InputSmall: return "input_small";
    case LrPolicy::Uniform: return "uniform";
    case LrPolicy::FrozenInput: return "frozen_input";
  }
  return "?";
}

LrPolicy parse_lr_policy(const std::string& s) {
  if (s == "input_small") return LrPolicy::InputSmall;
  if (s == "uniform") return LrPolicy::Uniform;
  if (s == "frozen_input") return LrPolicy::FrozenInput;
  throw ConfigError("unknown lr policy '" + s + "' (input_small|uniform|frozen_input)");
}

std::vector<std::pair<int, int>> SweepPlan::architectures() const {
  std::vector<std::pair<int, int>> out;
  for (int d : depths) {
    if (explicit_widths.empty())
      for (int r : width_ratios) out.emplace_back(d, r * d);
    else
      for (int w : explicit_widths) out.emplace_back(d, w);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void SweepPlan::validate() const {
  if (depths.empty() || (width_ratios.empty() && explicit_widths.empty())) throw ConfigError("sweep: empty grid");
  for (int d : depths)
    if (d < 1) throw ConfigError("sweep: depths must be >= 1");
  for (int r : width_ratios)
    if (r < 1) throw ConfigError("sweep: width ratios must be >= 1");
  for (int w : explicit_widths)
    if (w < 1) throw ConfigError("sweep: widths must be >= 1");
  if (seeds_per_arch < 1) throw ConfigError("sweep: seeds_per_arch must be >= 1");
  if (thresholds.empty()) throw ConfigError("sweep: at least one threshold");
  for (double t : thresholds)
    if (!(t > 0 && t <= 1)) throw ConfigError("sweep: thresholds must lie in (0, 1]");
  if (lambda_batch < 0) throw ConfigError("sweep: lambda_batch must be >= 0");
  if (threads < 1) throw ConfigError("sweep: threads must be >= 1");
  MilrConfig m = milr;
  m.t = thresholds.front();
  m.validate();
}

ConfigHeader SweepPlan::describe() const {
  auto ints = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
    return s;
  };
  std::string ts;
  for (std::size_t i = 0; i < thresholds.size(); ++i) ts += (i ? " " : "") + fmt(thresholds[i]);
  return {{"depths", ints(depths)},
          {"width_ratios", ints(width_ratios)},
          {"widths", ints(explicit_widths)},
          {"seeds_per_arch", std::to_string(seeds_per_arch)},
          {"scheme", to_string(scheme)},
          {"lr_policy", to_string(lr_policy)},
          {"input_multiplier", fmt(input_multiplier)},
          {"thresholds", ts},
          {"milr_l", fmt(milr.l)},
          {"milr_u", fmt(milr.u)},
          {"milr_s", std::to_string(milr.s)},
          {"milr_e", std::to_string(milr.e)},
          {"batch_size", std::to_string(train.batch_size)},
          {"loss", to_string(train.loss)},
          {"master_seed", std::to_string(master_seed)},
          {"lambda_batch", lambda_batch ? "up to " + std::to_string(lambda_batch) + " train samples (evenly strided)" : "full train split"},
          {"power_tol", fmt(power.tol)},
          {"power_max_iter", std::to_string(power.max_iter)}};
}

std::vector<int> lambda_batch_indices(const Dataset& ds, int k) {
  const std::size_t n = ds.train_idx.size();
  if (k <= 0 || static_cast<std::size_t>(k) >= n) return ds.train_idx;
  std::vector<int> idx;
  for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) idx.push_back(ds.train_idx[i * n / k]);
  return idx;
}

std::vector<SweepRow> run_sweep_cell(const SweepPlan& plan, const Dataset& ds, int depth, int width, int seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const Rng master(plan.master_seed);
  const std::uint64_t d = depth, w = width, s = seed;
  std::vector<SweepRow> rows;
  for (double t : plan.thresholds) {
    SweepRow r;
    r.depth = depth;
    r.width = width;
    r.seed = seed;
    r.t_used = t;
    rows.push_back(r);
  }
  try {
    Rng init_rng = master.derive({1, d, w, s});
    const auto arch = ArchSpec::constant(ds.d(), width, depth, ds.classes);
    const MlpD init = init_network<double>(arch, plan.scheme, init_rng);

    const std::vector<int> idx = lambda_batch_indices(ds, plan.lambda_batch);
    Rng power_rng = master.derive({3, d, w, s});
    const auto est = sharpness(init, make_batch(ds, idx, plan.train.loss), plan.train.loss, power_rng, plan.power);

    TrainConfig tc = plan.train;
    tc.shuffle_seed = master.derive({2, d, w, s}).next();
    tc.input_layer_multiplier = plan.lr_policy == LrPolicy::InputSmall ? plan.input_multiplier : 1.0;
    tc.freeze_input = plan.lr_policy == LrPolicy::FrozenInput;
    tc.epoch_log.clear();
    for (auto& r : rows) {
      r.lambda1_init = est.lambda1;
      r.two_over_lambda1 = 2.0 / std::abs(est.lambda1);
      MilrConfig mc = plan.milr;
      mc.t = r.t_used;
      const MilrResult res = estimate_milr(init, ds, mc, tc);
      r.found = res.found;
      r.eta_star = res.eta_star;
    }
  } catch (const Error& e) {
    for (auto& r : rows) {
      r.error = e.what();
      std::replace(r.error.begin(), r.error.end(), ',', ';');
      std::replace(r.error.begin(), r.error.end(), '\n', ' ');
      r.found = false;
      r.eta_star.reset();
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (auto& r : rows) r.wall_time = secs;
  return rows;
}

std::vector<SweepRow> run_sweep(const SweepPlan& plan, const Dataset& ds,
                                const std::function<void(const SweepRow&)>& on_row) {
  plan.validate();
  ds.validate();
  struct Cell {
    int depth, width, seed;
  };
  std::vector<Cell> cells;
  for (auto [d, w] : plan.architectures())
    for (int s = 0; s < plan.seeds_per_arch; ++s) cells.push_back({d, w, s});

  std::vector<std::vector<SweepRow>> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
      results[i] = run_sweep_cell(plan, ds, cells[i].depth, cells[i].width, cells[i].seed);
      if (on_row) {
        std::lock_guard<std::mutex> lock(mu);
        for (const auto& r : results[i]) on_row(r);
      }
    }
  };
  const int nt = std::min<int>(plan.threads, static_cast<int>(cells.size()));
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < nt; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  std::vector<SweepRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.depth, a.width, a.seed, a.t_used) < std::tie(b.depth, b.width, b.seed, b.t_used);
  });
  return rows;
}

CsvTable sweep_table(const std::vector<SweepRow>& rows, const ConfigHeader& config, bool with_time) {
  CsvTable t;
  t.config = config;
  t.header = {"depth", "width", "seed", "t_used", "eta_star", "found", "lambda1_init", "two_over_lambda1"};
  if (with_time) t.header.push_back("wall_time");
  t.header.push_back("error");
  for (const auto& r : rows) {
    std::vector<std::string> c = {fmt(static_cast<long long>(r.depth)), fmt(static_cast<long long>(r.width)),
                                  fmt(static_cast<long long>(r.seed)),  fmt(r.t_used),
                                  r.eta_star ? fmt(*r.eta_star) : "",   fmt(r.found),
                                  fmt(r.lambda1_init),                  fmt(r.two_over_lambda1)};
    if (with_time) c.push_back(fmt(r.wall_time));
    c.push_back(r.error);
    t.rows.push_back(std::move(c));
  }
  return t;
}

std::vector<SweepRow> parse_sweep_table(const CsvTable& t) {
  auto col = [&](const char* name) {
    const int c = t.column(name);
    if (c < 0) throw DataError(std::string("sweep csv lacks column ") + name);
    return c;
  };
  const int cd = col("depth"), cw = col("width"), cs = col("seed"), ct = col("t_used"), ce = col("eta_star"),
            cf = col("found"), cl = col("lambda1_init"), co = col("two_over_lambda1"), cr = col("error");
  const int ctime = t.column("wall_time");
  std::vector<SweepRow> rows;
  for (const auto& c : t.rows) {
    SweepRow r;
    r.depth = static_cast<int>(parse_double(c[cd]));
    r.width = static_cast<int>(parse_double(c[cw]));
    r.seed = static_cast<int>(parse_double(c[cs]));
    r.t_used = parse_double(c[ct]);
    if (!c[ce].empty()) r.eta_star = parse_double(c[ce]);
    r.found = c[cf] == "1";
    r.lambda1_init = parse_double(c[cl]);
    r.two_over_lambda1 = parse_double(c[co]);
    if (ctime >= 0) r.wall_time = parse_double(c[ctime]);
    r.error = c[cr];
    rows.push_back(std::move(r));
  }
  return rows;
}

FitResult fit_ols(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DataError("fit: x and y differ in length");
  if (x.size() < 2) throw DataError("fit: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw DataError("fit: all x values coincide");
  FitResult f;
  f.n_points = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (syy == 0) {
    f.slope = 0;
    f.intercept = my;
    f.r_squared = 0;
  } else {
    f.r_squared = std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  }
  return f;
}

FitResult fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DataError("fit: x and y differ in length");
  if (x.size() < 3) throw DataError("fit: need at least three points");
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0) || !std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw DataError("fit: non-positive value at index " + std::to_string(i));
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_ols(lx, ly);
}

namespace {

// log-log fit over (x, y) groups: per point, and on per-group means of the logs.
std::pair<FitResult, FitResult> fit_both(const std::vector<std::pair<double, double>>& pts,
                                         const std::vector<std::pair<int, int>>& keys) {
  std::vector<double> x, y;
  std::map<std::pair<int, int>, std::vector<std::pair<double, double>>> groups;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    x.push_back(pts[i].first);
    y.push_back(pts[i].second);
    groups[keys[i]].push_back(pts[i]);
  }
  FitResult per_seed, per_arch;
  if (x.size() >= 3) per_seed = fit_loglog(x, y);
  std::vector<double> gx, gy;
  for (const auto& [k, v] : groups) {
    double lx = 0, ly = 0;
    for (auto [a, b] : v) {
      lx += std::log(a);
      ly += std::log(b);
    }
    gx.push_back(std::exp(lx / double(v.size())));
    gy.push_back(std::exp(ly / double(v.size())));
  }
  if (gx.size() >= 3) per_arch = fit_loglog(gx, gy);
  return {per_seed, per_arch};
}

}  // namespace

PowerLawFits fit_sweep(const std::vector<SweepRow>& rows, double t) {
  std::vector<std::pair<double, double>> eta_pts, beta_pts;
  std::vector<std::pair<int, int>> keys;
  PowerLawFits f;
  std::size_t above = 0;
  for (const auto& r : rows) {
    if (r.t_used != t || !r.found || !r.eta_star || !r.error.empty()) continue;
    ++f.found_rows;
    if (*r.eta_star > r.two_over_lambda1) ++above;
    eta_pts.emplace_back(double(r.depth) * r.width, *r.eta_star);
    beta_pts.emplace_back(*r.eta_star, r.two_over_lambda1);
    keys.emplace_back(r.depth, r.width);
  }
  if (f.found_rows) f.frac_above_two_over_lambda = double(above) / double(f.found_rows);
  std::tie(f.eta_per_seed, f.eta_per_arch) = fit_both(eta_pts, keys);
  std::tie(f.beta_per_seed, f.beta_per_arch) = fit_both(beta_pts, keys);
  return f;
}

CsvTable fits_table(const PowerLawFits& f, const ConfigHeader& config) {
  CsvTable t;
  t.config = config;
  t.header = {"fit", "slope", "intercept", "r_squared", "n_points"};
  auto add = [&](const char* name, const FitResult& r) {
    t.rows.push_back({name, fmt(r.slope), fmt(r.intercept), fmt(r.r_squared), fmt(static_cast<long long>(r.n_points))});
  };
  add("eta_per_seed", f.eta_per_seed);
  add("eta_per_arch", f.eta_per_arch);
  add("beta_per_seed", f.beta_per_seed);
  add("beta_per_arch", f.beta_per_arch);
  t.config.emplace_back("found_rows", std::to_string(f.found_rows));
  t.config.emplace_back("frac_eta_above_two_over_lambda1", fmt(f.frac_above_two_over_lambda));
  return t;
}

ThresholdStability threshold_stability(const std::vector<SweepRow>& rows, double t_low, double t_high,
                                       double min_ratio) {
  std::map<std::tuple<int, int, int>, std::pair<double, double>> pairs;
  for (const auto& r : rows) {
    if (!r.found || !r.eta_star || double(r.width) < min_ratio * r.depth) continue;
    auto& p = pairs[{r.depth, r.width, r.seed}];
    if (r.t_used == t_low) p.first = *r.eta_star;
    if (r.t_used == t_high) p.second = *r.eta_star;
  }
  ThresholdStability s;
  s.t_low = t_low;
  s.t_high = t_high;
  for (const auto& [k, p] : pairs) {
    if (!(p.first > 0 && p.second > 0)) continue;
    const double ratio = p.first / p.second;
    s.min_ratio = s.pairs ? std::min(s.min_ratio, ratio) : ratio;
    s.max_ratio = s.pairs ? std::max(s.max_ratio, ratio) : ratio;
    s.mean_ratio += ratio;
    ++s.pairs;
  }
  if (s.pairs) s.mean_ratio /= double(s.pairs);
  return s;
}

std::vector<EosRun> eos_experiment(const ArchSpec& arch, InitScheme scheme, const std::vector<double>& etas,
                                   const Dataset& ds, const GdConfig& base, std::uint64_t seed) {
  if (etas.empty()) throw ConfigError("eos: empty learning-rate list");
  const MlpD init = init_network<double>(arch, scheme, seed);
  std::vector<EosRun> out;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    MlpD net = init;
    GdConfig cfg = base;
    cfg.lr = etas[i];
    Rng rng = Rng(seed).derive({static_cast<std::uint64_t>(i)});
    out.push_back({etas[i], seed, full_batch_gd(net, ds, cfg, rng)});
  }
  return out;
}

CsvTable eos_table(const std::vector<EosRun>& runs, const ConfigHeader& config) {
  CsvTable t;
  t.config = config;
  t.header = {"eta", "two_over_eta", "step", "loss", "train_accuracy", "lambda1", "diverged"};
  for (const auto& r : runs)
    for (const auto& p : r.traj.points)
      t.rows.push_back({fmt(r.eta), fmt(2.0 / r.eta), fmt(static_cast<long long>(p.step)), fmt(p.loss),
                        fmt(p.train_accuracy), std::isnan(p.lambda1) ? "" : fmt(p.lambda1), fmt(r.traj.diverged)});
  return t;
}

}  // namespace milr
