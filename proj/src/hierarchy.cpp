#include "crisp/hierarchy.hpp"

#include <cmath>

#include "json.hpp"

namespace crisp::hierarchy {

namespace {
constexpr double kBoxEps = 1e-6;
}

Variant variant_from_string(const std::string& s) {
  if (s == "flat") return Variant::flat;
  if (s == "hier") return Variant::hier;
  if (s == "hier-neg") return Variant::hier_neg;
  if (s == "crisp") return Variant::crisp;
  throw Error(Errc::config, "unknown variant: " + s);
}

std::string variant_to_string(Variant v) {
  switch (v) {
    case Variant::flat: return "flat";
    case Variant::hier: return "hier";
    case Variant::hier_neg: return "hier-neg";
    case Variant::crisp: return "crisp";
  }
  return "?";
}

GoalVec subgoal_to_goal_space(const Vec& raw, const EnvContract& contract) {
  require(raw.size() == contract.goal_low.size(), Errc::dimension_mismatch,
          "subgoal_to_goal_space: dim");
  GoalVec out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double lo = contract.goal_low[i], hi = contract.goal_high[i];
    const double t = clamp(raw[i], -1.0 + kBoxEps, 1.0 - kBoxEps);
    out[i] = lo + (t + 1.0) * 0.5 * (hi - lo);
  }
  return out;
}

Vec goal_space_to_raw(const GoalVec& subgoal, const EnvContract& contract) {
  require(subgoal.size() == contract.goal_low.size(), Errc::dimension_mismatch,
          "goal_space_to_raw: dim");
  Vec out(subgoal.size());
  for (std::size_t i = 0; i < subgoal.size(); ++i) {
    const double lo = contract.goal_low[i], hi = contract.goal_high[i];
    out[i] = clamp(2.0 * (subgoal[i] - lo) / (hi - lo) - 1.0, -1.0 + kBoxEps, 1.0 - kBoxEps);
  }
  return out;
}

HierEpisodeLog run_episode(Env& env, rl::SacAgent* higher, rl::SacAgent& lower,
                           const HierarchyConfig& cfg, Mode mode, Rng& lo_noise, Rng& hi_noise,
                           std::uint64_t episode_seed) {
  require(cfg.c >= 1 && cfg.c <= cfg.T, Errc::config, "run_episode: need 1 <= c <= T");
  HierEpisodeLog log;
  StateVec s = env.reset(episode_seed);
  const GoalVec g = env.goal();
  const int action_dim = env.contract().action_dim;

  while (log.steps < cfg.T && !log.success) {
    HigherDecision dec;
    dec.state = s;
    dec.goal = g;
    GoalVec sg;
    if (higher) {
      dec.raw_subgoal =
          higher->select_action(s, g, /*stochastic=*/mode == Mode::train, hi_noise);
      sg = subgoal_to_goal_space(dec.raw_subgoal, env.contract());
    } else {
      sg = g;  // identity higher: pass the episode goal through untouched
    }
    dec.subgoal = sg;
    log.subgoals.push_back(sg);

    bool reached = false;
    for (int k = 0; k < cfg.c && log.steps < cfg.T; ++k) {
      ActionVec a;
      if (mode == Mode::warmup) {
        a.resize(static_cast<std::size_t>(action_dim));
        for (double& x : a) x = lo_noise.uniform(-1.0, 1.0);
      } else {
        a = lower.select_action(s, sg, /*stochastic=*/mode == Mode::train, lo_noise);
      }
      EnvStep out = env.step(a);
      const double r_in = sparse_reward(env.achieved_goal(out.next_state), sg, cfg.delta_lo);
      const double r_ex = sparse_reward(env.achieved_goal(out.next_state), g, cfg.delta_hi);
      reached = reached || r_in == 0.0;
      log.success = log.success || r_ex == 0.0;

      rl::ReplayRecord rec;
      rec.state = s;
      rec.goal = sg;
      rec.action = a;
      rec.reward = r_in;
      rec.next_state = out.next_state;
      rec.done = r_in == 0.0;
      rec.level = rl::Level::lower;
      log.lower.push_back(std::move(rec));

      s = out.next_state;
      ++log.steps;
      if (log.success) break;
    }

    dec.r_ex = log.success ? 0.0 : -1.0;
    dec.next_state = s;
    dec.done = log.success;
    dec.lower_reached = reached;
    log.higher.push_back(std::move(dec));
  }
  return log;
}

void higher_reward_shaping(HierEpisodeLog& log, Variant variant) {
  if (variant != Variant::hier_neg) return;
  for (HigherDecision& dec : log.higher)
    if (!dec.lower_reached) dec.r_ex -= 1.0;
}

std::string episode_to_jsonl(const HierEpisodeLog& log) {
  nlohmann::json j;
  j["steps"] = log.steps;
  j["success"] = log.success;
  j["subgoals"] = log.subgoals;
  if (!log.higher.empty()) {
    j["goal"] = log.higher.front().goal;
    std::vector<int> reached;
    for (const auto& d : log.higher) reached.push_back(d.lower_reached ? 1 : 0);
    j["reached"] = reached;
    j["start"] = log.higher.front().state;
  }
  return j.dump();
}

}  // namespace crisp::hierarchy
