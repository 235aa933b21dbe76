// milr-cli: command-line front end. Every parameter is a key of the key-value
// config (--config FILE, then --set key=value overrides); see README for the keys.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "milr/analysis.hpp"
#include "milr/config.hpp"
#include "milr/theory.hpp"

using namespace milr;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string out = "out";
  std::string config_path;
  std::vector<std::string> sets;
};

KeyValueConfig load_config(const Globals& g) {
  KeyValueConfig cfg = g.config_path.empty() ? KeyValueConfig::parse("", "<none>") : KeyValueConfig::load(g.config_path);
  for (const auto& kv : g.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  return cfg;
}

fs::path out_file(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  return fs::path(g.out) / name;
}

void write_table(const Globals& g, const std::string& name, const CsvTable& t) {
  const auto p = out_file(g, name);
  write_csv(p.string(), t);
  std::printf("wrote %s\n", p.string().c_str());
}

// Dataset selection shared by every data-consuming command.
//   dataset = isotropic | anisotropic | mnist | <path to a cache written by gen-data>
Dataset load_data(const KeyValueConfig& cfg, std::uint64_t seed, ResolvedConfig& rc) {
  const std::string kind = cfg.get("dataset", std::string("isotropic"));
  rc.add("dataset", kind);
  if (kind == "isotropic" || kind == "anisotropic") {
    GaussianSpec gs;
    gs.anisotropic = kind == "anisotropic";
    gs.d = cfg.get("d", gs.d);
    gs.per_class_train = cfg.get("per_class_train", gs.per_class_train);
    gs.per_class_val = cfg.get("per_class_val", gs.per_class_val);
    gs.mean_scale = cfg.get("mean_scale", gs.mean_scale);
    gs.seed = static_cast<std::uint64_t>(cfg.get("data_seed", static_cast<long long>(seed)));
    rc.add("d", gs.d);
    rc.add("per_class_train", gs.per_class_train);
    rc.add("per_class_val", gs.per_class_val);
    rc.add("mean_scale", gs.mean_scale);
    rc.add("data_seed", gs.seed);
    return gen_gaussian(gs);
  }
  if (kind == "mnist") {
    const fs::path dir = cfg.get("mnist_dir", std::string("data/mnist"));
    rc.add("mnist_dir", dir.string());
    auto pick = [&](const std::string& stem) {
      for (const char* suffix : {"", ".gz"})
        if (fs::exists(dir / (stem + suffix))) return (dir / (stem + suffix)).string();
      throw DataError("missing " + (dir / stem).string() + "[.gz]");
    };
    rc.add("validation", "standard test split");
    return load_mnist(pick("train-images-idx3-ubyte"), pick("train-labels-idx1-ubyte"), pick("t10k-images-idx3-ubyte"),
                      pick("t10k-labels-idx1-ubyte"));
  }
  return load_dataset(kind);
}

TrainConfig train_config(const KeyValueConfig& cfg, ResolvedConfig& rc) {
  TrainConfig tc;
  tc.batch_size = cfg.get("batch_size", tc.batch_size);
  tc.loss = parse_loss(cfg.get("loss", to_string(tc.loss)));
  rc.add("batch_size", tc.batch_size);
  rc.add("loss", to_string(tc.loss));
  return tc;
}

void apply_lr_policy(const KeyValueConfig& cfg, TrainConfig& tc, ResolvedConfig& rc) {
  const LrPolicy pol = parse_lr_policy(cfg.get("lr_policy", std::string(to_string(LrPolicy::InputSmall))));
  const double mult = cfg.get("input_multiplier", 1e-2);
  tc.input_layer_multiplier = pol == LrPolicy::InputSmall ? mult : 1.0;
  tc.freeze_input = pol == LrPolicy::FrozenInput;
  rc.add("lr_policy", to_string(pol));
  rc.add("input_multiplier", tc.input_layer_multiplier);
}

MilrConfig milr_config(const KeyValueConfig& cfg, ResolvedConfig& rc) {
  MilrConfig m;
  m.l = cfg.get("l", m.l);
  m.u = cfg.get("u", m.u);
  m.s = cfg.get("s", m.s);
  m.e = cfg.get("e", m.e);
  rc.add("l", m.l);
  rc.add("u", m.u);
  rc.add("s", m.s);
  rc.add("e", m.e);
  return m;
}

PowerConfig power_config(const KeyValueConfig& cfg, ResolvedConfig& rc) {
  PowerConfig p;
  p.tol = cfg.get("power_tol", p.tol);
  p.max_iter = cfg.get("power_max_iter", p.max_iter);
  rc.add("power_tol", p.tol);
  rc.add("power_max_iter", p.max_iter);
  return p;
}

// Thresholds from the config, or the linear-classifier baseline when none is given.
std::vector<double> thresholds(const KeyValueConfig& cfg, const Dataset& ds, const TrainConfig& tc, std::uint64_t seed,
                               ResolvedConfig& rc) {
  std::vector<double> ts = cfg.get_doubles("t", {});
  if (ts.empty()) {
    const double t = linear_baseline(ds, tc, seed);
    std::printf("linear baseline accuracy t = %.6f\n", t);
    ts.push_back(t);
    rc.add("t_source", "linear baseline");
  } else {
    rc.add("t_source", "config");
  }
  rc.add("t", ts);
  return ts;
}

ConfigHeader merge(ConfigHeader a, const ConfigHeader& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// ---- commands ----

void cmd_gen_data(const Globals& g) {
  auto cfg = load_config(g);
  ResolvedConfig rc;
  rc.add("command", "gen-data");
  rc.add("seed", g.seed);
  const Dataset ds = load_data(cfg, g.seed, rc);
  const std::string name = cfg.get("file", std::string("dataset.bin"));
  rc.add("file", name);
  cfg.check_all_used();
  const auto path = out_file(g, name);
  save_dataset(ds, path.string());
  std::printf("wrote %s (%d samples, d = %d)\n", path.string().c_str(), ds.n(), ds.d());

  CsvTable t{rc.entries(), {"split", "class", "count"}, {}};
  for (const auto& [split, idx] : {std::pair{"train", &ds.train_idx}, std::pair{"val", &ds.val_idx}}) {
    std::vector<long long> counts(ds.classes, 0);
    for (int i : *idx) ++counts[ds.labels[i]];
    for (int c = 0; c < ds.classes; ++c) t.rows.push_back({split, std::to_string(c), fmt(counts[c])});
  }
  write_table(g, "dataset_summary.csv", t);
}

void cmd_milr(const Globals& g) {
  auto cfg = load_config(g);
  ResolvedConfig rc;
  rc.add("command", "milr");
  rc.add("seed", g.seed);
  const Dataset ds = load_data(cfg, g.seed, rc);
  const int depth = cfg.get("depth", 5), width = cfg.get("width", 40);
  const InitScheme scheme = parse_scheme(cfg.get("scheme", std::string("kaiming")));
  rc.add("depth", depth);
  rc.add("width", width);
  rc.add("scheme", to_string(scheme));
  TrainConfig tc = train_config(cfg, rc);
  MilrConfig mc = milr_config(cfg, rc);
  tc.epochs = mc.e;
  const auto ts = thresholds(cfg, ds, tc, g.seed, rc);
  apply_lr_policy(cfg, tc, rc);
  tc.shuffle_seed = Rng(g.seed).derive({2}).next();
  cfg.check_all_used();

  Rng init_rng = Rng(g.seed).derive({1});
  const MlpD init = init_network<double>(ArchSpec::constant(ds.d(), width, depth, ds.classes), scheme, init_rng);
  CsvTable t{{}, {"t", "iteration", "m", "best_acc", "passed", "diverged"}, {}};
  ResolvedConfig res;
  for (double thr : ts) {
    mc.t = thr;
    const MilrResult r = estimate_milr(init, ds, mc, tc);
    for (const auto& st : r.trace)
      t.rows.push_back({fmt(thr), std::to_string(st.iteration), fmt(st.m), fmt(st.best_acc), fmt(st.passed),
                        fmt(st.diverged)});
    res.add("eta_star(t=" + fmt(thr) + ")", r.eta_star ? fmt(*r.eta_star) : std::string("not found"));
    std::printf("t = %s: eta* = %s\n", fmt(thr).c_str(), r.eta_star ? fmt(*r.eta_star).c_str() : "not found");
  }
  t.config = merge(rc.entries(), res.entries());
  write_table(g, "milr_trace.csv", t);
}

SweepPlan sweep_plan(const KeyValueConfig& cfg, std::uint64_t seed) {
  SweepPlan p;
  p.depths = cfg.get_ints("depths", {5, 10, 15});
  p.width_ratios = cfg.get_ints("width_ratios", {8, 16});
  p.explicit_widths = cfg.get_ints("widths", {});
  p.seeds_per_arch = cfg.get("seeds_per_arch", p.seeds_per_arch);
  p.scheme = parse_scheme(cfg.get("scheme", std::string("kaiming")));
  p.lr_policy = parse_lr_policy(cfg.get("lr_policy", std::string(to_string(p.lr_policy))));
  p.input_multiplier = cfg.get("input_multiplier", p.input_multiplier);
  p.milr.l = cfg.get("l", p.milr.l);
  p.milr.u = cfg.get("u", p.milr.u);
  p.milr.s = cfg.get("s", p.milr.s);
  p.milr.e = cfg.get("e", p.milr.e);
  p.train.batch_size = cfg.get("batch_size", p.train.batch_size);
  p.train.loss = parse_loss(cfg.get("loss", to_string(p.train.loss)));
  p.master_seed = seed;
  p.lambda_batch = cfg.get("lambda_batch", p.lambda_batch);
  p.power.tol = cfg.get("power_tol", p.power.tol);
  p.power.max_iter = cfg.get("power_max_iter", p.power.max_iter);
  p.threads = cfg.get("threads", p.threads);
  return p;
}

void cmd_sweep(const Globals& g) {
  auto cfg = load_config(g);
  ResolvedConfig rc;
  rc.add("command", "sweep");
  const Dataset ds = load_data(cfg, g.seed, rc);
  SweepPlan plan = sweep_plan(cfg, g.seed);
  const bool with_time = cfg.get("with_time", false);
  {
    TrainConfig base = plan.train;
    base.epochs = plan.milr.e;
    ResolvedConfig scratch;
    plan.thresholds = thresholds(cfg, ds, base, g.seed, scratch);
    rc.add("t_source", scratch.entries().front().second);
  }
  cfg.check_all_used();
  plan.validate();
  const ConfigHeader header = merge(rc.entries(), plan.describe());

  // Rows are streamed in completion order while the sweep runs, then rewritten sorted.
  const auto path = out_file(g, "sweep.csv");
  std::ofstream stream(path);
  if (!stream) throw DataError("cannot write " + path.string());
  {
    const std::string head = to_csv(sweep_table({}, header, with_time));
    stream << head << std::flush;
  }
  const auto rows = run_sweep(plan, ds, [&](const SweepRow& r) {
    const std::string body = to_csv(sweep_table({r}, {}, with_time));
    stream << body.substr(body.find('\n') + 1) << std::flush;
    std::printf("depth %d width %d seed %d t %s: eta* %s, 2/lambda1 %s%s%s\n", r.depth, r.width, r.seed,
                fmt(r.t_used).c_str(), r.eta_star ? fmt(*r.eta_star).c_str() : "not found",
                fmt(r.two_over_lambda1).c_str(), r.error.empty() ? "" : ", error: ", r.error.c_str());
    std::fflush(stdout);
  });
  stream.close();
  write_table(g, "sweep.csv", sweep_table(rows, header, with_time));

  CsvTable fits{header, {"t", "fit", "slope", "intercept", "r_squared", "n_points"}, {}};
  for (double t : plan.thresholds) {
    try {
      const CsvTable ft = fits_table(fit_sweep(rows, t), {});
      for (auto row : ft.rows) {
        row.insert(row.begin(), fmt(t));
        fits.rows.push_back(row);
      }
    } catch (const DataError& e) {
      std::printf("t = %s: no fit (%s)\n", fmt(t).c_str(), e.what());
    }
  }
  write_table(g, "fits.csv", fits);
}

void cmd_fit(const Globals& g) {
  auto cfg = load_config(g);
  const std::string input = cfg.get("input", (fs::path(g.out) / "sweep.csv").string());
  cfg.check_all_used();
  const CsvTable in = read_csv(input);
  const auto rows = parse_sweep_table(in);
  std::vector<double> ts;
  for (const auto& r : rows)
    if (std::find(ts.begin(), ts.end(), r.t_used) == ts.end()) ts.push_back(r.t_used);
  ConfigHeader header = in.config;
  header.emplace_back("fit_input", input);
  CsvTable fits{header, {"t", "fit", "slope", "intercept", "r_squared", "n_points"}, {}};
  for (double t : ts) {
    PowerLawFits f;
    try {
      f = fit_sweep(rows, t);
    } catch (const DataError& e) {
      std::printf("t = %s: no fit (%s)\n", fmt(t).c_str(), e.what());
      continue;
    }
    for (auto row : fits_table(f, {}).rows) {
      row.insert(row.begin(), fmt(t));
      fits.rows.push_back(row);
    }
    std::printf("t = %s: alpha = %.4f (R^2 = %.4f, %zu architectures), eta* > 2/lambda1 in %.0f%% of %zu found rows\n",
                fmt(t).c_str(), f.eta_per_arch.alpha(), f.eta_per_arch.r_squared, f.eta_per_arch.n_points,
                100 * f.frac_above_two_over_lambda, f.found_rows);
  }
  write_table(g, "fits.csv", fits);
}

void cmd_sharpness(const Globals& g) {
  auto cfg = load_config(g);
  ResolvedConfig rc;
  rc.add("command", "sharpness");
  rc.add("seed", g.seed);
  const Dataset ds = load_data(cfg, g.seed, rc);
  const std::vector<int> depths = cfg.get_ints("depths", {5});
  const std::vector<int> widths = cfg.get_ints("widths", {40});
  const InitScheme scheme = parse_scheme(cfg.get("scheme", std::string("kaiming")));
  const int seeds = cfg.get("seeds", 5);
  const int k = cfg.get("lambda_batch", 4096);
  const LossKind loss = parse_loss(cfg.get("loss", std::string("cross_entropy")));
  rc.add("depths", depths);
  rc.add("widths", widths);
  rc.add("scheme", to_string(scheme));
  rc.add("seeds", seeds);
  rc.add("lambda_batch", k);
  rc.add("loss", to_string(loss));
  const PowerConfig pc = power_config(cfg, rc);
  cfg.check_all_used();
  if (seeds < 1) throw ConfigError("seeds must be >= 1");

  const BatchD batch = make_batch(ds, lambda_batch_indices(ds, k), loss);
  CsvTable t{rc.entries(), {"depth", "width", "seed", "lambda1", "two_over_lambda1", "iterations", "residual", "converged"}, {}};
  const Rng master(g.seed);
  for (int d : depths)
    for (int w : widths)
      for (int s = 0; s < seeds; ++s) {
        const std::uint64_t dd = d, ww = w, ss = s;
        Rng init_rng = master.derive({1, dd, ww, ss});
        const MlpD net = init_network<double>(ArchSpec::constant(ds.d(), w, d, ds.classes), scheme, init_rng);
        Rng r = master.derive({3, dd, ww, ss});
        const auto est = sharpness(net, batch, loss, r, pc);
        t.rows.push_back({std::to_string(d), std::to_string(w), std::to_string(s), fmt(est.lambda1),
                          fmt(2.0 / std::abs(est.lambda1)), std::to_string(est.iterations), fmt(est.residual),
                          fmt(est.converged)});
      }
  write_table(g, "sharpness.csv", t);
}

void cmd_frob_mc(const Globals& g) {
  auto cfg = load_config(g);
  ResolvedConfig rc;
  rc.add("command", "frob-mc");
  rc.add("seed", g.seed);
  const int n0 = cfg.get("n0", -1);
  const std::vector<int> widths = cfg.get_ints("widths", {8, 16, 32, 64});
  const std::vector<int> depths = cfg.get_ints("depths", {4});
  const InitScheme scheme = parse_scheme(cfg.get("scheme", std::string("kaiming")));
  const std::string kind = cfg.get("hessian", std::string("raw"));
  FrobeniusConfig fc;
  fc.seeds = cfg.get("seeds", fc.seeds);
  fc.probes = cfg.get("probes", fc.probes);
  fc.exact_cap = static_cast<std::size_t>(cfg.get("exact_cap", static_cast<long long>(fc.exact_cap)));
  const double eta = cfg.get("eta", 1.0);
  if (kind != "raw" && kind != "effective") throw ConfigError("hessian must be raw or effective");
  fc.kind = kind == "raw" ? HessianKind::Raw : HessianKind::Effective;
  rc.add("n0", n0 < 0 ? std::string("width") : std::to_string(n0));
  rc.add("widths", widths);
  rc.add("depths", depths);
  rc.add("scheme", to_string(scheme));
  rc.add("hessian", kind);
  if (fc.kind == HessianKind::Effective) rc.add("eta", eta);
  rc.add("seeds", fc.seeds);
  rc.add("probes", fc.probes);
  rc.add("exact_cap", fc.exact_cap);
  rc.add("setting", "scalar output; one input with ||x||^2 = n0; y ~ N(0 1); MSE");
  cfg.check_all_used();

  CsvTable per{rc.entries(), {"depth", "width", "seed", "estimate", "probes", "diverged"}, {}};
  CsvTable sum{rc.entries(), {"depth", "width", "params", "mean", "std_err", "seeds", "discarded"}, {}};
  const Rng master(g.seed);
  for (int L : depths)
    for (int n : widths) {
      const ArchSpec arch = ArchSpec::constant(n0 < 0 ? n : n0, n, L, 1);
      fc.eta_per_layer.assign(arch.weight_layers(), eta);
      Rng r = master.derive({static_cast<std::uint64_t>(L), static_cast<std::uint64_t>(n)});
      const FrobeniusStats st = frobenius_sq_mc(arch, scheme, fc, r);
      for (const auto& row : st.rows)
        per.rows.push_back({std::to_string(L), std::to_string(n), std::to_string(row.seed), fmt(row.estimate),
                            std::to_string(row.probes), fmt(row.diverged)});
      sum.rows.push_back({std::to_string(L), std::to_string(n), std::to_string(count_params(arch)), fmt(st.mean),
                          fmt(st.std_err), std::to_string(st.seeds), std::to_string(st.discarded)});
      std::printf("L = %d n = %d: E||H||_F^2 = %.6g +- %.2g\n", L, n, st.mean, st.std_err);
      std::fflush(stdout);
    }
  write_table(g, "frob_mc.csv", per);
  write_table(g, "frob_summary.csv", sum);
}

void cmd_theory_check(const Globals& g) {
  auto cfg = load_config(g);
  ResolvedConfig rc;
  rc.add("command", "theory-check");
  rc.add("seed", g.seed);
  const int width = cfg.get("width", 8), depth = cfg.get("depth", 4);
  TheoryConfig tc = TheoryConfig::constant(cfg.get("n0", width), width, depth, cfg.get("eta", 1.0));
  const int seeds = cfg.get("seeds", 2000);
  const int max_layer = cfg.get("max_layer", depth);
  const bool munu = cfg.get("munu", true);
  rc.add("n0", tc.widths[0]);
  rc.add("width", width);
  rc.add("depth", depth);
  rc.add("eta", tc.eta);
  rc.add("seeds", seeds);
  rc.add("max_layer", max_layer);
  rc.add("munu", munu);
  cfg.check_all_used();
  if (max_layer < 1 || max_layer > depth) throw ConfigError("max_layer must lie in [1, depth]");

  const RecursionState rec = run_recursion(tc);
  Rng rng(g.seed);
  const auto mc = mc_estimate_all(tc, max_layer, munu, seeds, rng);
  CsvTable t = parse_csv(theory_report_csv(rec, mc));
  t.config = rc.entries();
  int outside = 0;
  for (const auto& row : t.rows) outside += std::abs(parse_double(row[5])) > 3;
  write_table(g, "theory_report.csv", t);

  const TheoryPrediction p = heff_prediction(tc);
  CsvTable pred{rc.entries(), {"quantity", "value"}, {}};
  pred.rows = {{"heff_frob_sq", fmt(p.heff_frob_sq)},
               {"heff_large_width", fmt(p.heff_leading_order)},
               {"h_frob_sq", fmt(p.h_frob_sq)},
               {"h_frob_sq_over_n2L2", fmt(p.h_frob_sq_scaled)},
               {"lambda1_upper", fmt(p.lambda1_upper)},
               {"inv_sharpness_lower", fmt(p.inv_sharpness_lower)}};
  write_table(g, "theory_prediction.csv", pred);
  std::printf("%d of %zu recursion/sampling comparisons outside 3 standard errors\n", outside, t.rows.size());
}

void cmd_eos(const Globals& g) {
  auto cfg = load_config(g);
  ResolvedConfig rc;
  rc.add("command", "eos");
  rc.add("seed", g.seed);
  const Dataset ds = load_data(cfg, g.seed, rc);
  const int depth = cfg.get("depth", 3), width = cfg.get("width", 64);
  const InitScheme scheme = parse_scheme(cfg.get("scheme", std::string("kaiming")));
  const std::vector<double> etas = cfg.get_doubles("etas", {2.0 / 50});
  GdConfig gc;
  gc.steps = cfg.get("steps", 1000);
  gc.probe_interval = cfg.get("probe_interval", 20);
  gc.loss = parse_loss(cfg.get("loss", std::string("mse")));
  rc.add("depth", depth);
  rc.add("width", width);
  rc.add("scheme", to_string(scheme));
  rc.add("etas", etas);
  rc.add("steps", gc.steps);
  rc.add("probe_interval", gc.probe_interval);
  rc.add("loss", to_string(gc.loss));
  gc.power = power_config(cfg, rc);
  cfg.check_all_used();
  const ArchSpec arch = ArchSpec::constant(ds.d(), width, depth, ds.classes);
  const auto runs = eos_experiment(arch, scheme, etas, ds, gc, g.seed);
  for (const auto& r : runs) {
    const auto probes = r.traj.probes();
    std::printf("eta %s (2/eta = %s): initial lambda1 %.4g, final lambda1 %s%s\n", fmt(r.eta).c_str(),
                fmt(2 / r.eta).c_str(), r.traj.initial_lambda1,
                probes.empty() ? "n/a" : fmt(probes.back().lambda1).c_str(), r.traj.diverged ? " (diverged)" : "");
  }
  write_table(g, "eos.csv", eos_table(runs, rc.entries()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"maximal initial learning rate and sharpness experiments"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "master seed")->capture_default_str();
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--config", g.config_path, "key = value config file");
  app.add_option("--set", g.sets, "override one config key (key=value), repeatable");

  struct Cmd {
    const char* name;
    const char* help;
    void (*run)(const Globals&);
  };
  const Cmd cmds[] = {
      {"gen-data", "generate or load a dataset and write the binary cache", cmd_gen_data},
      {"milr", "estimate eta* for one initialization (bisection trace)", cmd_milr},
      {"sweep", "eta* and lambda1 over a (depth, width, seed) grid, plus power-law fits", cmd_sweep},
      {"sharpness", "lambda1 at initialization for a set of architectures", cmd_sharpness},
      {"frob-mc", "Monte Carlo E||H||_F^2 in the scalar-output setting", cmd_frob_mc},
      {"theory-check", "Y recursions against brute-force sampling", cmd_theory_check},
      {"eos", "full-batch GD with periodic lambda1 probes", cmd_eos},
      {"fit", "power-law fits of an existing sweep CSV", cmd_fit},
  };
  for (const auto& c : cmds) app.add_subcommand(c.name, c.help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  try {
    for (const auto& c : cmds)
      if (app.got_subcommand(c.name)) c.run(g);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
