#pragma once

#include <functional>
#include <string>
#include <vector>

#include "crisp/core.hpp"
#include "crisp/rl.hpp"

namespace crisp::hierarchy {

struct HierarchyConfig {
  int c = 10;            // primitive steps per subgoal
  double delta_lo = 0.1;
  double delta_hi = 0.1;
  int T = 120;           // episode horizon
};

enum class Mode { train, eval, warmup };

enum class Variant { flat, hier, hier_neg, crisp };

Variant variant_from_string(const std::string& s);
std::string variant_to_string(Variant v);

struct HigherDecision {
  StateVec state;       // state at decision time
  GoalVec goal;         // episode goal
  ActionVec raw_subgoal;  // higher action in (-1,1)^goal_dim (empty for identity)
  GoalVec subgoal;      // mapped into goal space
  double r_ex = -1.0;
  StateVec next_state;  // state at block end
  bool done = false;
  bool lower_reached = false;  // lower primitive got within delta_lo in-block
};

struct HierEpisodeLog {
  std::vector<rl::ReplayRecord> lower;
  std::vector<HigherDecision> higher;
  bool success = false;
  int steps = 0;
  std::vector<GoalVec> subgoals;
};

// Affine map between the higher actor's raw (-1,1) output and the
// environment's goal-space box (epsilon shy of the faces).
GoalVec subgoal_to_goal_space(const Vec& raw, const EnvContract& contract);
Vec goal_space_to_raw(const GoalVec& subgoal, const EnvContract& contract);

// Runs one episode. `higher == nullptr` means the identity higher policy:
// the episode goal itself is passed straight through as the subgoal (no
// network evaluation, no rng consumption). Noise streams are consumed only
// in Mode::train (warmup draws uniform actions from lo_noise).
HierEpisodeLog run_episode(Env& env, rl::SacAgent* higher, rl::SacAgent& lower,
                           const HierarchyConfig& cfg, Mode mode, Rng& lo_noise, Rng& hi_noise,
                           std::uint64_t episode_seed);

// HIER leaves extrinsic rewards untouched; HIER-NEG subtracts 1 from every
// decision whose subgoal the lower primitive failed to reach in its block.
void higher_reward_shaping(HierEpisodeLog& log, Variant variant);

// JSON-lines episode record (subgoal sequence and outcome) for plots.
std::string episode_to_jsonl(const HierEpisodeLog& log);

}  // namespace crisp::hierarchy
