#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "milr/csv.hpp"
#include "milr/milr.hpp"

namespace milr {

enum class LrPolicy { InputSmall, Uniform, FrozenInput };
const char* to_string(LrPolicy p);
LrPolicy parse_lr_policy(const std::string& s);

struct SweepPlan {
  std::vector<int> depths;
  std::vector<int> width_ratios;     // width = ratio * depth
  std::vector<int> explicit_widths;  // used instead when non-empty
  int seeds_per_arch = 5;
  InitScheme scheme = InitScheme::Kaiming;
  LrPolicy lr_policy = LrPolicy::InputSmall;
  double input_multiplier = 1e-2;
  std::vector<double> thresholds;  // one MILR search per threshold and row
  MilrConfig milr;
  TrainConfig train;               // base_lr / epochs / stop are set per probe
  std::uint64_t master_seed = 0;
  int lambda_batch = 4096;         // k train samples at even stride; 0 = whole train split
  PowerConfig power;
  int threads = 1;

  std::vector<std::pair<int, int>> architectures() const;  // (depth, width), sorted
  void validate() const;
  ConfigHeader describe() const;
};

struct SweepRow {
  int depth = 0, width = 0, seed = 0;
  double t_used = 0;
  std::optional<double> eta_star;
  bool found = false;
  double lambda1_init = 0;
  double two_over_lambda1 = 0;
  double wall_time = 0;  // seconds; left out of CSV unless requested (it breaks byte equality)
  std::string error;     // non-empty when the row failed

  bool operator==(const SweepRow&) const = default;
};

// Fixed evaluation batch for lambda1: train_idx[i * N / k], i < k (all of it when k <= 0 or k >= N).
std::vector<int> lambda_batch_indices(const Dataset& ds, int k);

// Rows for one (depth, width, seed), one per threshold. Failures are captured in `error`.
std::vector<SweepRow> run_sweep_cell(const SweepPlan& plan, const Dataset& ds, int depth, int width, int seed);

// Runs every cell, optionally on several worker threads; `on_row` sees rows as they complete
// (serialised). The result is sorted by (depth, width, seed, t).
std::vector<SweepRow> run_sweep(const SweepPlan& plan, const Dataset& ds,
                                const std::function<void(const SweepRow&)>& on_row = {});

CsvTable sweep_table(const std::vector<SweepRow>& rows, const ConfigHeader& config, bool with_time = false);
std::vector<SweepRow> parse_sweep_table(const CsvTable& t);

struct FitResult {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
  std::size_t n_points = 0;

  double alpha() const { return -slope; }  // ln y = -alpha ln x + gamma
};

// OLS of y on x. Constant y gives slope 0 and R^2 0.
FitResult fit_ols(const std::vector<double>& x, const std::vector<double>& y);
// OLS of ln y on ln x; needs >= 3 points, all positive (DataError names the first offending index).
FitResult fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct PowerLawFits {
  FitResult eta_per_seed;   // ln eta* on ln(depth*width), found rows
  FitResult eta_per_arch;   // mean ln eta* per architecture
  FitResult beta_per_seed;  // ln(2/lambda1) on ln eta*
  FitResult beta_per_arch;
  double frac_above_two_over_lambda = 0;  // among found rows
  std::size_t found_rows = 0;
};
PowerLawFits fit_sweep(const std::vector<SweepRow>& rows, double t);
CsvTable fits_table(const PowerLawFits& f, const ConfigHeader& config);

// Per (arch, seed) with width/depth >= min_ratio: eta*(t_low) / eta*(t_high).
struct ThresholdStability {
  double t_low = 0, t_high = 0;
  std::size_t pairs = 0;
  double mean_ratio = 0, min_ratio = 0, max_ratio = 0;
};
ThresholdStability threshold_stability(const std::vector<SweepRow>& rows, double t_low, double t_high,
                                       double min_ratio = 16);

struct EosRun {
  double eta = 0;
  std::uint64_t seed = 0;
  GdTrajectory traj;
};

// One full-batch GD run per learning rate from the same initialization.
std::vector<EosRun> eos_experiment(const ArchSpec& arch, InitScheme scheme, const std::vector<double>& etas,
                                   const Dataset& ds, const GdConfig& base, std::uint64_t seed);
CsvTable eos_table(const std::vector<EosRun>& runs, const ConfigHeader& config);

}  // namespace milr
