// Shared test oracles: scripted primitives, a brute-force demonstration
// parser, and finite-difference gradient checks. Everything here is kept
// independent of the library code paths it is used to verify.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "crisp/approx.hpp"
#include "crisp/core.hpp"
#include "crisp/demos.hpp"
#include "crisp/relabel.hpp"

namespace crisp::test {

// Scripted 1-D mover: heads straight for the goal at a fixed fraction of the
// environment's per-step range. With a line env of step_scale v, block reach
// is c * v * speed_fraction.
inline relabel::LowerPolicy line_mover(double step_scale, double speed_fraction) {
  return [step_scale, speed_fraction](const StateVec& s, const GoalVec& g) -> ActionVec {
    return {clamp((g[0] - s[0]) / step_scale, -speed_fraction, speed_fraction)};
  };
}

// Greedy planar mover for maze/point-style envs (2-d goal space): per-axis
// action proportional to the remaining offset, capped at speed_fraction.
inline relabel::LowerPolicy planar_mover(double step_scale, double speed_fraction) {
  return [step_scale, speed_fraction](const StateVec& s, const GoalVec& g) -> ActionVec {
    ActionVec a(2);
    for (int i = 0; i < 2; ++i)
      a[static_cast<std::size_t>(i)] =
          clamp((g[static_cast<std::size_t>(i)] - s[static_cast<std::size_t>(i)]) / step_scale,
                -speed_fraction, speed_fraction);
    return a;
  };
}

// A mover that never moves (the incapable primitive).
inline relabel::LowerPolicy frozen_mover(int action_dim) {
  return [action_dim](const StateVec&, const GoalVec&) {
    return ActionVec(static_cast<std::size_t>(action_dim), 0.0);
  };
}

// Brute-force reference parser: first tabulates, for every ordered pair of
// demo indices, whether the primitive reaches the later state from the
// earlier one (by a from-scratch rollout) and in how many steps; then walks
// the same advance/retry/trailing recurrence over the table. Shares no
// rollout bookkeeping with relabel::pip_parse.
struct BruteForceParser {
  struct Reach {
    bool success = false;
    int steps = 0;
  };

  static std::vector<relabel::SubgoalTransition> parse(const demos::Trajectory& demo,
                                                       const relabel::LowerPolicy& lower,
                                                       Env& env, int c, double delta_lo) {
    const std::size_t n = demo.states.size();
    std::vector<std::vector<Reach>> table(n, std::vector<Reach>(n));
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q)
        table[p][q] = simulate(demo.states[p], env.achieved_goal(demo.states[q]), lower, env, c,
                               delta_lo);

    std::vector<relabel::SubgoalTransition> out;
    const std::size_t last = n - 1;
    std::size_t in_idx = 0;
    std::size_t i = 1;
    bool final_probed = false;
    Reach final_probe;
    while (i <= last) {
      const Reach r = table[in_idx][i];
      if (i == last) {
        final_probe = r;
        final_probed = true;
      }
      if (r.success) {
        ++i;
        continue;
      }
      if (i - 1 == in_idx) {
        out.push_back({demo.states[in_idx], env.achieved_goal(demo.states[i]), demo.goal, false});
        in_idx = i;
        final_probed = false;
        ++i;
      } else {
        out.push_back(
            {demo.states[in_idx], env.achieved_goal(demo.states[i - 1]), demo.goal, true});
        in_idx = i - 1;
        final_probed = false;
      }
    }
    if (in_idx != last) {
      const bool comfortably = final_probed && final_probe.success && final_probe.steps < c;
      if (!comfortably)
        out.push_back({demo.states[in_idx], env.achieved_goal(demo.states[last]), demo.goal,
                       final_probed && final_probe.success});
    }
    return out;
  }

  static Reach simulate(const StateVec& from, const GoalVec& target,
                        const relabel::LowerPolicy& lower, Env& env, int c, double delta_lo) {
    env.reset_to(from);
    StateVec s = from;
    if (l2_distance(env.achieved_goal(s), target) <= delta_lo) return {true, 0};
    for (int t = 1; t <= c; ++t) {
      s = env.step(lower(s, target)).next_state;
      if (l2_distance(env.achieved_goal(s), target) <= delta_lo) return {true, t};
    }
    return {false, c};
  }
};

// Central finite differences of a scalar function of the parameter vector.
inline double fd_gradient(const std::function<double(const approx::ParamVector&)>& f,
                          approx::ParamVector params, int index, double h = 1e-5) {
  const double saved = params.v[static_cast<std::size_t>(index)];
  params.v[static_cast<std::size_t>(index)] = saved + h;
  const double up = f(params);
  params.v[static_cast<std::size_t>(index)] = saved - h;
  const double down = f(params);
  params.v[static_cast<std::size_t>(index)] = saved;
  return (up - down) / (2.0 * h);
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0e-6, std::abs(a), std::abs(b)});
}

// Straight-line 1-D demo with integer-spaced states, used by the analytic
// parsing traces.
inline demos::Trajectory line_demo(int n_states, double goal_at) {
  demos::Trajectory demo;
  demo.env_id = "line";
  demo.goal = {goal_at};
  for (int i = 0; i < n_states; ++i) demo.states.push_back({static_cast<double>(i)});
  return demo;
}

}  // namespace crisp::test
