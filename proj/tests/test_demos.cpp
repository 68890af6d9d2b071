#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "crisp/demos.hpp"
#include "crisp/envs.hpp"
#include "crisp/rng.hpp"
#include "doctest.h"

using namespace crisp;
using namespace crisp::demos;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("rrt: degenerate, collision-free, step-bounded") {
  const envs::MazeSpec maze = envs::generate_maze(2, 8, 8);

  // start == goal -> two identical states.
  GoalVec start = {0.5, 0.5};
  Trajectory same = rrt_plan(maze, start, start, 1);
  CHECK(same.states.size() == 2);
  CHECK(same.states[0] == same.states[1]);

  // A crossing path: collision-free, densified to one kinematic step.
  RrtParams params;
  params.densify_step = 0.25;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GoalVec goal = {7.5, 7.5};
    Trajectory traj = rrt_plan(maze, start, goal, seed, params);
    REQUIRE(traj.states.size() >= 2);
    CHECK(l2_distance({traj.states.back()[0], traj.states.back()[1]}, goal) < 1e-9);
    for (const StateVec& s : traj.states) CHECK_FALSE(maze.occupied_at(s[0], s[1]));
    for (std::size_t i = 1; i < traj.states.size(); ++i) {
      CHECK(std::abs(traj.states[i][0] - traj.states[i - 1][0]) <= 0.25 + 1e-9);
      CHECK(std::abs(traj.states[i][1] - traj.states[i - 1][1]) <= 0.25 + 1e-9);
    }
  }
}

TEST_CASE("rrt smoothing: open-room paths near straight-line length") {
  envs::MazeSpec open;
  open.width = 8;
  open.height = 8;  // wall_col = -1: no interior walls
  int within = 0;
  const int n = 100;
  Rng rng(10);
  for (int i = 0; i < n; ++i) {
    const GoalVec s = {rng.uniform(0.5, 7.5), rng.uniform(0.5, 7.5)};
    const GoalVec g = {rng.uniform(0.5, 7.5), rng.uniform(0.5, 7.5)};
    const double straight = l2_distance(s, g);
    if (straight < 1.0) continue;
    Trajectory traj = rrt_plan(open, s, g, static_cast<std::uint64_t>(i));
    double len = 0;
    for (std::size_t k = 1; k < traj.states.size(); ++k)
      len += std::hypot(traj.states[k][0] - traj.states[k - 1][0],
                        traj.states[k][1] - traj.states[k - 1][1]);
    if (len <= 1.5 * straight) ++within;
    CHECK(len <= 2.5 * straight);  // hard cap even before smoothing luck
  }
  CHECK(within >= 90);  // post-smoothing bound holds on the vast majority
}

TEST_CASE("rrt failure: unreachable goal hits the node cap") {
  const envs::MazeSpec maze = envs::generate_maze(2, 8, 8);
  RrtParams params;
  params.node_cap = 50;
  params.goal_bias = 0.0;
  CHECK_THROWS_AS(rrt_plan(maze, {0.5, 0.5}, {7.5, 7.5}, 3, params), Error);
}

TEST_CASE("scripted push expert") {
  envs::BlockPushEnv::Params p;
  p.goal_min_dist = 0.5;
  envs::BlockPushEnv env(p);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Trajectory traj = scripted_push_expert(env, seed);
    REQUIRE(traj.states.size() >= 2);
    // Final block position within the success threshold of the goal.
    const StateVec& last = traj.states.back();
    CHECK(l2_distance({last[2], last[3]}, traj.goal) <=
          0.1 * env.contract().workspace_diameter);
    // Approach phase: gripper-block distance non-increasing until contact.
    double prev = std::hypot(traj.states[0][2] - traj.states[0][0],
                             traj.states[0][3] - traj.states[0][1]);
    for (std::size_t i = 1; i < traj.states.size(); ++i) {
      const double d = std::hypot(traj.states[i][2] - traj.states[i][0],
                                  traj.states[i][3] - traj.states[i][1]);
      if (prev > 0.5 * env.contact_radius()) CHECK(d <= prev + 1e-9);
      prev = d;
    }
  }

  // Block already at the goal: immediate success, minimal trajectory.
  env.reset(3);
  StateVec s = env.state();
  env.set_goal({s[2], s[3]});
  // Re-run the controller via the public entry: craft by resetting goal after
  // reset is not possible through scripted_push_expert (it resets), so check
  // the controller's early-exit on a crafted env instead.
  envs::BlockPushEnv env2(p);
  env2.reset(3);
  env2.set_goal(env2.achieved_goal(env2.state()));
  // With distance zero the first step already reports done.
  const EnvStep out = env2.step({0, 0, 0});
  CHECK(out.done);
}

TEST_CASE("rope poke expert") {
  envs::RopeEnv env{envs::RopeEnv::Params{}};
  env.reset(5);
  const GoalVec goal = env.goal();

  // start == goal: no pokes, trajectory padded to length 2.
  Trajectory none = rope_poke_expert(env, env.reset(5), 5);
  CHECK(none.states.size() == 2);
  CHECK(none.states[0] == none.states[1]);

  // Single displaced joint: the first poke targets exactly that joint and its
  // direction points at the goal twin. Relaxation off so the displacement is
  // the raw poke vector.
  envs::RopeEnv::Params rigid;
  rigid.relax_iters = 0;
  envs::RopeEnv env_rigid(rigid);
  env_rigid.reset(6);
  StateVec start = env_rigid.state();
  GoalVec target = start;
  const int j = 7;
  target[2 * j] += 0.12;
  target[2 * j + 1] += 0.06;
  env_rigid.reset_to(start);
  Trajectory traj = rope_poke_expert(env_rigid, target, 6, 1);
  REQUIRE(traj.states.size() >= 2);
  const StateVec& after = traj.states[1];
  int moved = -1;
  double best = 0;
  for (int k = 0; k < env.joints(); ++k) {
    const double d = std::hypot(after[2 * k] - start[2 * k], after[2 * k + 1] - start[2 * k + 1]);
    if (d > best) {
      best = d;
      moved = k;
    }
  }
  CHECK(moved == j);
  // Displacement direction equals atan2(goal - joint).
  const double eta = std::atan2(after[2 * j + 1] - start[2 * j + 1], after[2 * j] - start[2 * j]);
  const double want = std::atan2(target[2 * j + 1] - start[2 * j + 1],
                                 target[2 * j] - start[2 * j]);
  CHECK(eta == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("demo generation: per-step reachability and determinism") {
  for (const char* name : {"point", "blockpush"}) {
    DemoDataset a = generate_demos(name, "{}", 5, 42);
    DemoDataset b = generate_demos(name, "{}", 5, 42);
    REQUIRE(a.trajectories.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(a.trajectories[i].states == b.trajectories[i].states);

    auto env = envs::make_env(name, "{}");
    for (const Trajectory& t : a.trajectories)
      for (std::size_t i = 1; i < t.states.size(); ++i)
        CHECK(l2_distance(env->achieved_goal(t.states[i]), env->achieved_goal(t.states[i - 1])) <=
              env->contract().step_bound + 1e-9);
  }
}

TEST_CASE("dataset save/load round trip") {
  DemoDataset ds = generate_demos("point", "{}", 4, 9);
  const std::string path = tmp_path("crisp_demos_rt.jsonl");
  save_dataset(ds, path);
  DemoDataset back = load_dataset(path);
  CHECK(back.state_dim == ds.state_dim);
  CHECK(back.goal_dim == ds.goal_dim);
  REQUIRE(back.trajectories.size() == ds.trajectories.size());
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    CHECK(back.trajectories[i].states == ds.trajectories[i].states);  // bit-exact
    CHECK(back.trajectories[i].goal == ds.trajectories[i].goal);
  }
  std::remove(path.c_str());
}

TEST_CASE("dataset load failures carry line numbers") {
  const std::string path = tmp_path("crisp_demos_bad.jsonl");
  DemoDataset ds = generate_demos("point", "{}", 3, 1);
  save_dataset(ds, path);

  // Truncate the last line.
  {
    std::ifstream in(path);
    std::string all, line;
    int n = 0;
    while (std::getline(in, line))
      if (++n <= 3) all += line + "\n";
    std::ofstream out(path);
    out << all << "{\"env\": \"point\", \"goal\": [0.1,";  // cut mid-record
  }
  CHECK_THROWS_WITH_AS(load_dataset(path), doctest::Contains("line"), Error);
  std::remove(path.c_str());

  // Empty dataset is valid with count 0.
  DemoDataset empty;
  empty.env_id = "point";
  empty.state_dim = 2;
  empty.goal_dim = 2;
  const std::string epath = tmp_path("crisp_demos_empty.jsonl");
  save_dataset(empty, epath);
  CHECK(load_dataset(epath).trajectories.empty());
  std::remove(epath.c_str());
}
