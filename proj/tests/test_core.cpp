#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "crisp/core.hpp"
#include "crisp/envs.hpp"
#include "crisp/rng.hpp"
#include "doctest.h"

using namespace crisp;

TEST_CASE("sparse reward dichotomy and boundary") {
  CHECK(sparse_reward({0, 0}, {0, 0}, 0.1) == 0.0);
  CHECK(sparse_reward({1, 0}, {0, 0}, 0.5) == -1.0);
  // 3-4-5 triangle: distance exactly 0.5, boundary counts as success.
  CHECK(sparse_reward({0.3, 0.4}, {0, 0}, 0.5) == 0.0);

  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    GoalVec a = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
    GoalVec g = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const double delta = rng.uniform(0.01, 2.0);
    const double r = sparse_reward(a, g, delta);
    CHECK((r == 0.0 || r == -1.0));
    CHECK((r == 0.0) == (l2_distance(a, g) <= delta));
  }
}

TEST_CASE("sparse reward rejects bad input") {
  CHECK_THROWS_AS(sparse_reward({0, 0}, {0, 0, 0}, 0.1), Error);
  CHECK_THROWS_AS(sparse_reward({0, 0}, {0, 0}, 0.0), Error);
}

TEST_CASE("reset determinism and bounds") {
  auto env = envs::make_env("maze", R"({"layout_seed": 3})");
  const StateVec a = env->reset(42);
  const StateVec b = env->reset(42);
  CHECK(a == b);

  // Different seeds stay in bounds and out of walls.
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const StateVec s = env->reset(seed);
    CHECK(s[0] >= 0.0);
    CHECK(s[0] <= 8.0);
    CHECK(s[1] >= 0.0);
    CHECK(s[1] <= 8.0);
    auto* maze = dynamic_cast<envs::MazeEnv*>(env.get());
    CHECK_FALSE(maze->spec().occupied_at(s[0], s[1]));
  }
}

TEST_CASE("reset_to is identity on valid states and rejects invalid ones") {
  auto env = envs::make_env("maze", R"({"layout_seed": 3})");
  const StateVec s = env->reset(5);
  StateVec target = s;
  target[0] = 0.3;
  target[1] = 0.3;  // cell (0,0) is always free (walls are interior)
  const StateVec got = env->reset_to(target);
  CHECK(got == target);
  CHECK(env->state() == target);

  // One zero-action step stays within the kinematic step bound.
  const EnvStep out = env->step({0.0, 0.0});
  CHECK(l2_distance(env->achieved_goal(out.next_state), env->achieved_goal(target)) <=
        env->contract().step_bound);

  // A state inside a wall cell names the violated bound.
  auto* maze = dynamic_cast<envs::MazeEnv*>(env.get());
  const auto& spec = maze->spec();
  StateVec bad = s;
  bad[0] = (spec.wall_col + 0.5) * spec.cell_size;
  bad[1] = (spec.wall_row + 0.5) * spec.cell_size;
  CHECK_THROWS_WITH_AS(env->reset_to(bad), doctest::Contains("occupied"), Error);

  StateVec outside = s;
  outside[0] = 55.0;
  CHECK_THROWS_WITH_AS(env->reset_to(outside), doctest::Contains("workspace"), Error);

  StateVec nan_state = s;
  nan_state[1] = std::nan("");
  CHECK_THROWS_AS(env->reset_to(nan_state), Error);
}

TEST_CASE("kinematic step examples") {
  auto env = envs::make_env("point", R"({"size": 4.0, "step_scale": 0.1})");
  env->reset(0);
  env->reset_to({2.0, 2.0});
  const EnvStep out = env->step({1.0, 0.0});
  CHECK(out.next_state[0] == doctest::Approx(2.1).epsilon(1e-12));
  CHECK(out.next_state[1] == doctest::Approx(2.0).epsilon(1e-12));

  // Zero action leaves the state untouched.
  const StateVec before = env->state();
  CHECK(env->step({0.0, 0.0}).next_state == before);

  // Out-of-bounds action components are clamped and flagged.
  const EnvStep clamped = env->step({5.0, 0.0});
  CHECK(clamped.info.clamped);
  CHECK(clamped.next_state[0] == doctest::Approx(before[0] + 0.1).epsilon(1e-9));
}

TEST_CASE("achieved_goal projections are pure") {
  auto maze = envs::make_env("maze", R"({"layout_seed": 1})");
  const StateVec s = maze->reset(9);
  CHECK(maze->achieved_goal(s) == GoalVec{s[0], s[1]});
  CHECK(maze->achieved_goal(s) == maze->achieved_goal(s));

  auto push = envs::make_env("blockpush", "{}");
  const StateVec ps = push->reset(4);
  CHECK(push->achieved_goal(ps) == GoalVec{ps[2], ps[3]});

  auto rope = envs::make_env("rope", "{}");
  const StateVec rs = rope->reset(2);
  CHECK(rope->achieved_goal(rs) == rs);
}

TEST_CASE("full trajectories are bit-reproducible for fixed seed and actions") {
  auto run = [] {
    auto env = envs::make_env("blockpush", "{}");
    env->reset(123);
    Rng rng(17);
    std::vector<double> trace;
    for (int t = 0; t < 30; ++t) {
      const EnvStep out =
          env->step({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
      trace.insert(trace.end(), out.next_state.begin(), out.next_state.end());
    }
    return trace;
  };
  CHECK(run() == run());
}
