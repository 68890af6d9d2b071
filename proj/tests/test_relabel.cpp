#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "crisp/demos.hpp"
#include "crisp/envs.hpp"
#include "crisp/relabel.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace crisp;
using namespace crisp::relabel;

namespace {

// The analytic parsing environment: x in [0, 10], per-step range 0.5, demo
// states at the integers. A mover with speed fraction f covers at most
// c * 0.5 * f per block; with delta_lo = 0.25 and c = 10 the probe fails at
// integer distances above 0.5 * f * 10 + 0.25.
std::unique_ptr<Env> line_env() {
  return envs::make_env("line", R"({"length": 10.0, "step_scale": 0.5, "horizon": 60})");
}

std::vector<double> subgoal_xs(const std::vector<SubgoalTransition>& trs) {
  std::vector<double> xs;
  for (const auto& t : trs) xs.push_back(t.subgoal[0]);
  return xs;
}

}  // namespace

TEST_CASE("pip trace: reach 2.5 yields subgoals {2,4,6,8}") {
  auto env = line_env();
  const demos::Trajectory demo = test::line_demo(11, 10.0);
  ParseStats stats;
  const auto trs =
      pip_parse(demo, test::line_mover(0.5, 0.5), *env, 10, 0.25, &stats);
  CHECK(subgoal_xs(trs) == std::vector<double>{2, 4, 6, 8});
  for (const auto& t : trs) {
    CHECK(t.verified);
    CHECK(t.final_goal == GoalVec{10.0});
  }
  CHECK(trs[0].initial_state == StateVec{0.0});
  CHECK(trs[1].initial_state == StateVec{2.0});
  CHECK(trs[2].initial_state == StateVec{4.0});
  CHECK(trs[3].initial_state == StateVec{6.0});
  CHECK(stats.env_steps > 0);
}

TEST_CASE("pip trace: reach 5.0 yields subgoals {5,10}") {
  auto env = line_env();
  const demos::Trajectory demo = test::line_demo(11, 10.0);
  const auto trs = pip_parse(demo, test::line_mover(0.5, 1.0), *env, 10, 0.25);
  CHECK(subgoal_xs(trs) == std::vector<double>{5, 10});
  CHECK(trs[0].initial_state == StateVec{0.0});
  CHECK(trs[1].initial_state == StateVec{5.0});
  // The trailing transition was verified: the full-budget probe reached it.
  CHECK(trs[1].verified);
}

TEST_CASE("pip: omnipotent primitive emits nothing") {
  auto env = line_env();
  // Short demo: every state within comfortable one-block reach.
  const demos::Trajectory demo = test::line_demo(5, 4.0);
  const auto trs = pip_parse(demo, test::line_mover(0.5, 1.0), *env, 10, 0.25);
  CHECK(trs.empty());
}

TEST_CASE("pip: incapable primitive forced-advances through every state") {
  auto env = line_env();
  const demos::Trajectory demo = test::line_demo(11, 10.0);
  const auto trs = pip_parse(demo, test::frozen_mover(1), *env, 10, 0.25);
  CHECK(subgoal_xs(trs) == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  for (const auto& t : trs) CHECK_FALSE(t.verified);  // forced advances are unverified
}

TEST_CASE("pip matches the brute-force parser on the line") {
  auto env = line_env();
  for (double fraction : {0.25, 0.4, 0.5, 0.7, 1.0}) {
    for (int n_states : {6, 9, 11}) {
      const demos::Trajectory demo = test::line_demo(n_states, n_states - 1.0);
      const auto lower = test::line_mover(0.5, fraction);
      const auto got = pip_parse(demo, lower, *env, 10, 0.25);
      const auto want = test::BruteForceParser::parse(demo, lower, *env, 10, 0.25);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].initial_state == want[i].initial_state);
        CHECK(got[i].subgoal == want[i].subgoal);
        CHECK(got[i].verified == want[i].verified);
      }
    }
  }
}

TEST_CASE("pip matches the brute-force parser on maze demos") {
  const envs::MazeSpec spec = envs::generate_maze(3, 8, 8);
  envs::MazeEnv::Params p;
  p.spec = spec;
  envs::MazeEnv env(p);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    env.reset(seed + 100);
    const GoalVec start = env.achieved_goal(env.state());
    const GoalVec goal = env.goal();
    demos::Trajectory demo;
    try {
      demo = demos::rrt_plan(spec, start, goal, seed, demos::RrtParams{.densify_step = 0.25});
    } catch (const Error&) {
      continue;
    }
    const auto lower = test::planar_mover(0.25, 0.6);
    const auto got = pip_parse(demo, lower, env, 10, 0.8);
    const auto want = test::BruteForceParser::parse(demo, lower, env, 10, 0.8);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].subgoal == want[i].subgoal);
      CHECK(got[i].initial_state == want[i].initial_state);
    }
  }
}

TEST_CASE("pip achievability certificate: verified transitions replay") {
  auto env = line_env();
  const demos::Trajectory demo = test::line_demo(11, 10.0);
  const auto lower = test::line_mover(0.5, 0.5);
  const auto trs = pip_parse(demo, lower, *env, 10, 0.25);
  for (const auto& t : trs) {
    if (!t.verified) continue;
    const auto probe = test::BruteForceParser::simulate(t.initial_state, t.subgoal, lower, *env,
                                                        10, 0.25);
    CHECK(probe.success);
  }
}

TEST_CASE("pip: every emitted subgoal lies on the source trajectory") {
  auto env = line_env();
  const demos::Trajectory demo = test::line_demo(11, 10.0);
  for (double f : {0.3, 0.5, 1.0}) {
    const auto trs = pip_parse(demo, test::line_mover(0.5, f), *env, 10, 0.25);
    for (const auto& t : trs) {
      bool on_demo = false;
      for (const auto& s : demo.states)
        on_demo = on_demo || env->achieved_goal(s) == t.subgoal;
      CHECK(on_demo);
      CHECK(t.final_goal == demo.goal);
    }
  }
}

TEST_CASE("fixed window parse arithmetic") {
  const demos::Trajectory demo = test::line_demo(11, 10.0);  // states 0..10

  auto xs_of = [](const std::vector<SubgoalTransition>& trs) {
    std::vector<double> xs;
    for (const auto& t : trs) xs.push_back(t.subgoal[0]);
    return xs;
  };

  // k = 3: subgoals at indices 3, 6, 9 with initial states 0, 3, 6.
  const auto k3 = fixed_window_parse(demo, 3);
  CHECK(xs_of(k3) == std::vector<double>{3, 6, 9});
  CHECK(k3[0].initial_state == StateVec{0.0});
  CHECK(k3[1].initial_state == StateVec{3.0});
  CHECK(k3[2].initial_state == StateVec{6.0});

  // k >= length: single transition to the last state.
  const auto kbig = fixed_window_parse(demo, 25);
  REQUIRE(kbig.size() == 1);
  CHECK(kbig[0].subgoal[0] == 10.0);
  CHECK(kbig[0].initial_state == StateVec{0.0});

  // k = 1: one transition per consecutive pair.
  const auto k1 = fixed_window_parse(demo, 1);
  CHECK(k1.size() == 10);
  for (std::size_t i = 0; i < k1.size(); ++i)
    CHECK(k1[i].subgoal[0] == static_cast<double>(i + 1));

  CHECK_THROWS_AS(fixed_window_parse(demo, 0), Error);
}

TEST_CASE("fixed window output is invariant to the primitive") {
  auto env = line_env();
  demos::DemoDataset ds;
  ds.env_id = "line";
  ds.state_dim = 1;
  ds.goal_dim = 1;
  ds.trajectories = {test::line_demo(11, 10.0), test::line_demo(8, 7.0)};

  const auto weak = repopulate(ds, test::frozen_mover(1), *env, ParserKind::window, 3, 10, 0.25,
                               0, "a");
  const auto strong = repopulate(ds, test::line_mover(0.5, 1.0), *env, ParserKind::window, 3, 10,
                                 0.25, 0, "b");
  REQUIRE(weak.transitions.size() == strong.transitions.size());
  for (std::size_t i = 0; i < weak.transitions.size(); ++i)
    CHECK(weak.transitions[i].subgoal == strong.transitions[i].subgoal);
}

TEST_CASE("repopulate: determinism, strictly fewer transitions, provenance") {
  auto env = line_env();
  demos::DemoDataset ds;
  ds.env_id = "line";
  ds.state_dim = 1;
  ds.goal_dim = 1;
  ds.trajectories = {test::line_demo(11, 10.0)};

  const auto a = repopulate(ds, test::line_mover(0.5, 0.5), *env, ParserKind::pip, 0, 10, 0.25,
                            0, "ckpt-0");
  const auto b = repopulate(ds, test::line_mover(0.5, 0.5), *env, ParserKind::pip, 0, 10, 0.25,
                            0, "ckpt-0");
  REQUIRE(a.transitions.size() == b.transitions.size());
  for (std::size_t i = 0; i < a.transitions.size(); ++i)
    CHECK(a.transitions[i].subgoal == b.transitions[i].subgoal);

  // Stronger primitive => strictly fewer transitions (5 -> 10 vs 2,4,6,8).
  const auto strong = repopulate(ds, test::line_mover(0.5, 1.0), *env, ParserKind::pip, 0, 10,
                                 0.25, 500, "ckpt-500");
  CHECK(a.transitions.size() == 4);
  CHECK(strong.transitions.size() == 2);
  CHECK(strong.transitions.size() < a.transitions.size());

  // Provenance epochs stamp the repopulation schedule.
  CHECK(a.epoch == 0);
  CHECK(strong.epoch == 500);
  CHECK(a.parser == "pip");
  CHECK(a.subgoals_per_demo == doctest::Approx(4.0));
}

TEST_CASE("curriculum monotonicity over nested primitive capabilities") {
  auto env = line_env();
  demos::DemoDataset ds;
  ds.env_id = "line";
  ds.state_dim = 1;
  ds.goal_dim = 1;
  for (int n : {7, 9, 10, 11}) ds.trajectories.push_back(test::line_demo(n, n - 1.0));

  double prev = 1e18;
  bool strict = false;
  for (double f : {0.2, 0.35, 0.5, 0.75, 1.0}) {
    const auto dg =
        repopulate(ds, test::line_mover(0.5, f), *env, ParserKind::pip, 0, 10, 0.25, 0, "x");
    CHECK(dg.subgoals_per_demo <= prev);
    strict = strict || dg.subgoals_per_demo < prev - 1e-12;
    prev = dg.subgoals_per_demo;
  }
  CHECK(strict);
}

TEST_CASE("repopulate: reset rejection skips the demo; empty result throws") {
  auto env = line_env();
  demos::DemoDataset ds;
  ds.env_id = "line";
  ds.state_dim = 1;
  ds.goal_dim = 1;
  demos::Trajectory bad;
  bad.env_id = "line";
  bad.goal = {5.0};
  bad.states = {{-3.0}, {5.0}};  // initial state outside the workspace
  ds.trajectories = {bad};
  CHECK_THROWS_AS(
      repopulate(ds, test::line_mover(0.5, 1.0), *env, ParserKind::pip, 0, 10, 0.25, 0, "x"),
      Error);

  // Mixed: the bad demo is skipped, the good one parses.
  ds.trajectories.push_back(test::line_demo(11, 10.0));
  ParseStats stats;
  const auto dg = repopulate(ds, test::line_mover(0.5, 1.0), *env, ParserKind::pip, 0, 10, 0.25,
                             0, "x", &stats);
  CHECK(stats.demos_skipped == 1);
  CHECK(dg.transitions.size() == 2);
}

TEST_CASE("subgoal dataset save/load round trip") {
  auto env = line_env();
  demos::DemoDataset ds;
  ds.env_id = "line";
  ds.state_dim = 1;
  ds.goal_dim = 1;
  ds.trajectories = {test::line_demo(11, 10.0)};
  SubgoalDataset dg = repopulate(ds, test::line_mover(0.5, 0.5), *env, ParserKind::pip, 0, 10,
                                 0.25, 1500, "ckpt-1500");
  const std::string path =
      (std::filesystem::temp_directory_path() / "crisp_dg_rt.jsonl").string();
  dg.save(path);
  const SubgoalDataset back = SubgoalDataset::load(path);
  CHECK(back.epoch == dg.epoch);
  CHECK(back.parser == dg.parser);
  CHECK(back.checkpoint_id == dg.checkpoint_id);
  REQUIRE(back.transitions.size() == dg.transitions.size());
  for (std::size_t i = 0; i < dg.transitions.size(); ++i) {
    CHECK(back.transitions[i].initial_state == dg.transitions[i].initial_state);
    CHECK(back.transitions[i].subgoal == dg.transitions[i].subgoal);
    CHECK(back.transitions[i].verified == dg.transitions[i].verified);
  }
  CHECK(back.lower_pairs.size() == dg.lower_pairs.size());
  std::remove(path.c_str());
}

TEST_CASE("lower pairs: consecutive demo states within parsed segments") {
  auto env = line_env();
  const demos::Trajectory demo = test::line_demo(11, 10.0);
  std::vector<LowerPair> pairs;
  pip_parse(demo, test::line_mover(0.5, 0.5), *env, 10, 0.25, nullptr, &pairs);
  for (const auto& p : pairs) {
    CHECK(p.next_state[0] - p.state[0] == 1.0);
    CHECK(p.subgoal[0] >= p.state[0]);  // segment target lies ahead
  }
  CHECK(!pairs.empty());
}
