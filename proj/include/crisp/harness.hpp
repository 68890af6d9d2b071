#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crisp/core.hpp"
#include "crisp/demos.hpp"
#include "crisp/hierarchy.hpp"
#include "crisp/regularize.hpp"
#include "crisp/relabel.hpp"
#include "crisp/rl.hpp"

namespace crisp::harness {

// Full experiment description, parsed from a flat key=value file. Unknown
// keys are rejected so config typos fail fast.
struct RunConfig {
  std::string env = "maze";
  std::string env_params_json = "{}";

  int T = 120;
  int c = 10;
  double delta_lo = 0.0;  // 0 -> 0.1 * workspace diameter
  double delta_hi = 0.0;

  hierarchy::Variant variant = hierarchy::Variant::crisp;
  bool higher_identity = false;

  regularize::RegularizerConfig reg;
  relabel::ParserKind parser = relabel::ParserKind::pip;
  int window_k = 5;
  long population_period = 5000;

  long total_steps = 150000;
  long stop_at = 0;  // checkpoint and return at this step (0 = run to total)
  std::string demo_path;
  int demo_limit = 0;  // 0 = all
  std::uint64_t seed = 0;

  long eval_every = 2000;
  int eval_rollouts = 20;
  std::uint64_t eval_seed_base = 1000000;
  long checkpoint_every = 0;  // 0 = final only
  std::string out_dir;
  bool save_dg_snapshots = true;
  bool save_eval_episodes = false;

  rl::SacConfig sac;
  double alpha_hi = -1.0;  // entropy coefficient for the higher level; -1 = sac.alpha
  long capacity = 100000;
  long warmup = 1000;
  int update_every = 1;          // env steps between lower update cycles
  int higher_update_every = 0;   // 0 -> c
  std::string higher_gamma_mode = "per_decision";  // or c_power
  int nan_abort_after = 100;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_string(const std::string& text);
  std::string to_string() const;
  void validate() const;
};

struct MetricsRow {
  long step = 0;
  long relabel_steps = 0;
  double loss_lo_critic = 0, loss_lo_actor = 0;
  double loss_hi_critic = 0, loss_hi_actor = 0;
  double loss_disc_lo = 0, loss_disc_hi = 0;
  double loss_reg_lo = 0, loss_reg_hi = 0;
  double success = 0;
  long dg_size = 0;
  double subgoals_per_demo = 0;
};

extern const char* kMetricsHeader;
std::string metrics_to_csv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> metrics_from_csv(const std::string& text);

struct TrainResult {
  std::vector<MetricsRow> rows;
  std::string checkpoint_path;
  long env_steps = 0;
  long relabel_steps = 0;
  long nan_skips = 0;
  double final_success = 0.0;
};

// Runs the full training loop: every population_period env steps the subgoal
// dataset is cleared and refilled by parsing the demos with the current lower
// primitive; both levels learn by SAC with the configured regularizer folded
// into the actor objectives.
TrainResult train(const RunConfig& cfg);

// Continues a checkpointed run to its configured total step budget.
TrainResult resume(const std::string& checkpoint_path);

// --- evaluation ---

struct EvalSuite {
  std::string env;
  std::string params_json = "{}";
  std::vector<std::uint64_t> seeds;

  void save(const std::string& path) const;
  static EvalSuite load(const std::string& path);
};

// Deterministic-mode rollouts over held-out instances; success means the
// extrinsic reward reached 0 within the horizon. Episode logs are collected
// into `logs` when given (curriculum/diagnostic plots).
double evaluate(Env& env, rl::SacAgent* higher, rl::SacAgent& lower,
                const hierarchy::HierarchyConfig& hcfg, const std::vector<std::uint64_t>& seeds,
                std::vector<hierarchy::HierEpisodeLog>* logs = nullptr);

double evaluate_checkpoint(const std::string& checkpoint_path, const std::string& suite_path,
                           int rollouts);

// Parses a demo file with the lower primitive stored in a checkpoint.
void relabel_with_checkpoint(const std::string& demos_path, const std::string& checkpoint_path,
                             relabel::ParserKind parser, int window_k,
                             const std::string& out_path);

// --- sweeps ---

struct SweepResult {
  int runs = 0;
  int failures = 0;
  std::string archive_dir;
};

// Grid JSON: {"psi":[..], "population_period":[..], "window_k":[..],
// "demo_limit":[..], "seeds":[..]} -> one run per grid point per seed,
// archived under out_dir/<point>/seed<k>/. Individual failures are recorded
// and the sweep continues.
SweepResult sweep(const RunConfig& base, const std::string& grid_json,
                  const std::string& out_dir, int parallelism = 0);

// --- plots (plot.cpp) ---

// Success-rate curves: one labeled group per archive subdirectory holding
// seed*/metrics.csv; mean across seeds drawn as the line, min-max range as
// the band. Returns the written file paths.
std::vector<std::string> plot_success_curves(const std::string& archive_dir,
                                             const std::string& out_dir);

// Subgoal curriculum snapshots from dg_epoch_*.jsonl files in a run dir.
std::vector<std::string> plot_curriculum(const std::string& run_dir, const std::string& out_dir);

// Series helper shared by plots and tests: per-step mean and min/max across
// seeds, interpolating onto the first seed's step grid when grids differ.
struct CurveStats {
  std::vector<double> steps, mean, lo, hi;
  bool interpolated = false;
};
CurveStats curve_stats(const std::vector<std::vector<std::pair<double, double>>>& series);

}  // namespace crisp::harness
