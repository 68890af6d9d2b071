#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crisp/core.hpp"
#include "crisp/envs.hpp"

namespace crisp::demos {

// Expert demonstration: states only, plus the episode goal.
struct Trajectory {
  std::string env_id;
  GoalVec goal;
  std::vector<StateVec> states;
};

struct DemoDataset {
  std::string env_id;
  std::string generator;
  std::uint64_t seed = 0;
  int state_dim = 0;
  int goal_dim = 0;
  std::vector<Trajectory> trajectories;
};

struct RrtParams {
  double extension_step = 0.8;
  double goal_bias = 0.1;
  int node_cap = 5000;
  double densify_step = 0.25;  // per-axis cap on emitted state deltas
  int smooth_passes = 3;
};

// Collision-free state sequence through the maze from start to goal, RRT
// grown with goal bias and node cap, shortcut-smoothed, densified so each
// consecutive pair is one kinematic step apart. Emits full maze states.
Trajectory rrt_plan(const envs::MazeSpec& maze, const GoalVec& start, const GoalVec& goal,
                    std::uint64_t seed, const RrtParams& params = {});

// Three-phase scripted controller: approach block, grip, carry to goal.
Trajectory scripted_push_expert(envs::BlockPushEnv& env, std::uint64_t seed);

// Farthest joint-pair poker: repeatedly pokes the joint whose goal twin is
// farthest, in the direction of that twin, until within delta or max_pokes.
Trajectory rope_poke_expert(envs::RopeEnv& env, const GoalVec& goal_config, std::uint64_t seed,
                            int max_pokes = 40);

// Dispatcher used by the CLI and tests: env constructed from params_json,
// one trajectory per instance seed. Unsuccessful episodes are dropped unless
// keep_failures is set.
DemoDataset generate_demos(const std::string& env_name, const std::string& params_json, int count,
                           std::uint64_t seed, bool keep_failures = false);

// JSON-lines persistence: a header line with dataset metadata, then one
// trajectory per line. Round-trips states bit-exactly.
void save_dataset(const DemoDataset& ds, const std::string& path);
DemoDataset load_dataset(const std::string& path);

}  // namespace crisp::demos
