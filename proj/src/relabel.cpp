#include "crisp/relabel.hpp"

#include <fstream>
#include <iostream>

#include "json.hpp"

namespace crisp::relabel {

using nlohmann::json;

namespace {

struct Probe {
  bool success = false;
  int steps_used = 0;
};

// Roll the lower primitive out from `from` toward the goal-space projection
// of demo state `target`, for at most c steps, stopping early on success.
Probe probe_reach(Env& env, const LowerPolicy& lower, const StateVec& from, const GoalVec& target,
                  int c, double delta_lo, ParseStats* stats) {
  env.reset_to(from);
  StateVec s = from;
  if (sparse_reward(env.achieved_goal(s), target, delta_lo) == 0.0) return {true, 0};
  for (int t = 1; t <= c; ++t) {
    EnvStep out = env.step(lower(s, target));
    if (stats) ++stats->env_steps;
    s = out.next_state;
    if (sparse_reward(env.achieved_goal(s), target, delta_lo) == 0.0) return {true, t};
  }
  return {false, c};
}

void emit_pairs(const demos::Trajectory& demo, std::size_t from_idx, std::size_t to_idx,
                const GoalVec& subgoal, bool verified, std::vector<LowerPair>* pairs_out) {
  if (!pairs_out) return;
  for (std::size_t i = from_idx; i < to_idx; ++i)
    pairs_out->push_back({demo.states[i], demo.states[i + 1], subgoal, verified});
}

}  // namespace

std::vector<SubgoalTransition> pip_parse(const demos::Trajectory& demo, const LowerPolicy& lower,
                                         Env& env, int c, double delta_lo, ParseStats* stats,
                                         std::vector<LowerPair>* pairs_out) {
  require(c >= 1, Errc::invalid_argument, "pip_parse: c must be >= 1");
  require(delta_lo > 0, Errc::invalid_argument, "pip_parse: delta_lo must be > 0");
  require(demo.states.size() >= 2, Errc::invalid_argument,
          "pip_parse: demo must have at least 2 states");

  std::vector<SubgoalTransition> out;
  const std::size_t last = demo.states.size() - 1;
  std::size_t in_idx = 0;  // index of the current initial state
  StateVec s_in = demo.states[0];

  Probe final_probe;        // result of the most recent probe of the last state
  bool final_probed = false;

  std::size_t i = 1;
  while (i <= last) {
    const GoalVec target = env.achieved_goal(demo.states[i]);
    const Probe probe = probe_reach(env, lower, s_in, target, c, delta_lo, stats);
    if (i == last) {
      final_probe = probe;
      final_probed = true;
    }
    if (probe.success) {
      ++i;
      continue;
    }
    if (i - 1 == in_idx) {
      // Forced advance: even the immediate next demo state is unreachable.
      out.push_back({s_in, target, demo.goal, /*verified=*/false});
      emit_pairs(demo, in_idx, i, target, /*verified=*/false, pairs_out);
      in_idx = i;
      s_in = demo.states[i];
      final_probed = false;
      ++i;
    } else {
      // Last reachable probe becomes the subgoal and the new initial state;
      // the failed probe is retried from there.
      out.push_back({s_in, env.achieved_goal(demo.states[i - 1]), demo.goal, /*verified=*/true});
      emit_pairs(demo, in_idx, i - 1, env.achieved_goal(demo.states[i - 1]), /*verified=*/true,
                 pairs_out);
      in_idx = i - 1;
      s_in = demo.states[i - 1];
      final_probed = false;
    }
  }

  // Trailing transition: cover the demo's end state unless the final probe
  // reached it with slack (strictly fewer than c steps).
  if (in_idx != last) {
    const bool comfortably = final_probed && final_probe.success && final_probe.steps_used < c;
    if (!comfortably) {
      const bool verified = final_probed && final_probe.success;
      out.push_back({s_in, env.achieved_goal(demo.states[last]), demo.goal, verified});
      emit_pairs(demo, in_idx, last, env.achieved_goal(demo.states[last]), verified, pairs_out);
    }
  }
  return out;
}

std::vector<SubgoalTransition> fixed_window_parse(const demos::Trajectory& demo, int k,
                                                  std::vector<LowerPair>* pairs_out) {
  require(k >= 1, Errc::invalid_argument, "fixed_window_parse: k must be >= 1");
  require(demo.states.size() >= 2, Errc::invalid_argument,
          "fixed_window_parse: demo must have at least 2 states");
  std::vector<SubgoalTransition> out;
  const std::size_t last = demo.states.size() - 1;
  const std::size_t n_full = last / static_cast<std::size_t>(k);
  // Window subgoals are stored as raw demo states here; repopulate() projects
  // them into goal space (this keeps the parse itself projection-free).
  if (n_full == 0) {
    // Demo shorter than one window: single transition to its final state.
    SubgoalTransition tr;
    tr.initial_state = demo.states[0];
    tr.subgoal.assign(demo.states[last].begin(), demo.states[last].end());
    tr.final_goal = demo.goal;
    tr.verified = true;
    out.push_back(std::move(tr));
    emit_pairs(demo, 0, last, out.back().subgoal, true, pairs_out);
    return out;
  }
  for (std::size_t j = 1; j <= n_full; ++j) {
    const std::size_t start = (j - 1) * static_cast<std::size_t>(k);
    const std::size_t end = j * static_cast<std::size_t>(k);
    SubgoalTransition tr;
    tr.initial_state = demo.states[start];
    tr.subgoal.assign(demo.states[end].begin(), demo.states[end].end());
    tr.final_goal = demo.goal;
    tr.verified = true;
    out.push_back(std::move(tr));
    emit_pairs(demo, start, end, out.back().subgoal, true, pairs_out);
  }
  return out;
}

ParserKind parser_from_string(const std::string& s) {
  if (s == "none") return ParserKind::none;
  if (s == "pip") return ParserKind::pip;
  if (s == "window") return ParserKind::window;
  throw Error(Errc::config, "unknown parser: " + s);
}

std::string parser_to_string(ParserKind k) {
  switch (k) {
    case ParserKind::none: return "none";
    case ParserKind::pip: return "pip";
    case ParserKind::window: return "window";
  }
  return "?";
}

SubgoalDataset repopulate(const demos::DemoDataset& demos, const LowerPolicy& lower, Env& env,
                          ParserKind parser, int window_k, int c, double delta_lo, long epoch,
                          const std::string& checkpoint_id, ParseStats* stats) {
  require(parser != ParserKind::none, Errc::invalid_argument, "repopulate: parser is none");
  SubgoalDataset ds;
  ds.epoch = epoch;
  ds.parser = parser_to_string(parser);
  ds.checkpoint_id = checkpoint_id;
  ds.demo_count = static_cast<int>(demos.trajectories.size());

  long total_subgoals = 0;
  int parsed = 0;
  for (const demos::Trajectory& demo : demos.trajectories) {
    std::vector<SubgoalTransition> trs;
    std::vector<LowerPair> pairs;
    try {
      if (parser == ParserKind::pip) {
        trs = pip_parse(demo, lower, env, c, delta_lo, stats, &pairs);
      } else {
        trs = fixed_window_parse(demo, window_k, &pairs);
        // Window subgoals are raw demo states; project into goal space.
        for (SubgoalTransition& tr : trs) tr.subgoal = env.achieved_goal(tr.subgoal);
        for (LowerPair& p : pairs) p.subgoal = env.achieved_goal(p.subgoal);
      }
    } catch (const Error& e) {
      if (e.code() == Errc::bad_state) {
        if (stats) ++stats->demos_skipped;
        std::cerr << "repopulate: skipping demo (" << e.what() << ")\n";
        continue;
      }
      throw;
    }
    ++parsed;
    total_subgoals += static_cast<long>(trs.size());
    for (auto& t : trs) ds.transitions.push_back(std::move(t));
    for (auto& p : pairs) ds.lower_pairs.push_back(std::move(p));
  }
  require(parsed > 0, Errc::empty_dataset, "repopulate: every demo was skipped");
  ds.subgoals_per_demo = parsed > 0 ? static_cast<double>(total_subgoals) / parsed : 0.0;
  return ds;
}

void SubgoalDataset::save(const std::string& path) const {
  std::ofstream f(path);
  require(f.good(), Errc::io, "subgoal dataset: cannot open " + path);
  json header;
  header["version"] = 1;
  header["epoch"] = epoch;
  header["parser"] = parser;
  header["checkpoint"] = checkpoint_id;
  header["count"] = transitions.size();
  header["pair_count"] = lower_pairs.size();
  header["subgoals_per_demo"] = subgoals_per_demo;
  header["demo_count"] = demo_count;
  f << header.dump() << "\n";
  for (const SubgoalTransition& t : transitions) {
    json line;
    line["s"] = t.initial_state;
    line["sg"] = t.subgoal;
    line["g"] = t.final_goal;
    line["verified"] = t.verified;
    f << line.dump() << "\n";
  }
  for (const LowerPair& p : lower_pairs) {
    json line;
    line["pair"] = true;
    line["s"] = p.state;
    line["sn"] = p.next_state;
    line["sg"] = p.subgoal;
    line["verified"] = p.verified;
    f << line.dump() << "\n";
  }
  require(f.good(), Errc::io, "subgoal dataset: write failure on " + path);
}

SubgoalDataset SubgoalDataset::load(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), Errc::io, "subgoal dataset: cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(f, line)), Errc::io,
          "subgoal dataset: missing header in " + path);
  json header = json::parse(line);
  require(header.value("version", -1) == 1, Errc::io, "subgoal dataset: unsupported version");
  SubgoalDataset ds;
  ds.epoch = header.value("epoch", -1l);
  ds.parser = header.value("parser", "");
  ds.checkpoint_id = header.value("checkpoint", "");
  ds.subgoals_per_demo = header.value("subgoals_per_demo", 0.0);
  ds.demo_count = header.value("demo_count", 0);
  const std::size_t count = header.at("count").get<std::size_t>();
  const std::size_t pair_count = header.value("pair_count", std::size_t{0});
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(Errc::io, "subgoal dataset: parse error at line " + std::to_string(lineno) +
                                ": " + e.what());
    }
    if (j.value("pair", false)) {
      ds.lower_pairs.push_back(
          {j.at("s").get<Vec>(), j.at("sn").get<Vec>(), j.at("sg").get<Vec>(),
           j.value("verified", true)});
    } else {
      ds.transitions.push_back({j.at("s").get<Vec>(), j.at("sg").get<Vec>(), j.at("g").get<Vec>(),
                                j.value("verified", true)});
    }
  }
  require(ds.transitions.size() == count && ds.lower_pairs.size() == pair_count, Errc::io,
          "subgoal dataset: truncated file (count mismatch)");
  return ds;
}

}  // namespace crisp::relabel
