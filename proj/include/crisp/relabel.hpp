#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "crisp/core.hpp"
#include "crisp/demos.hpp"

namespace crisp::relabel {

// Deterministic lower-level control law used during parsing (trained policy
// in deterministic mode, or a scripted mover in tests).
using LowerPolicy = std::function<ActionVec(const StateVec& state, const GoalVec& subgoal)>;

struct SubgoalTransition {
  StateVec initial_state;
  GoalVec subgoal;
  GoalVec final_goal;
  // True when the parsing rollouts reached this subgoal from initial_state
  // within c steps; forced-advance emissions are unverified.
  bool verified = true;
};

// Consecutive demo state pair inside a parsed segment, with the segment's
// target subgoal; feeds the lower-level regularizers.
struct LowerPair {
  StateVec state;
  StateVec next_state;
  GoalVec subgoal;
  bool verified = true;
};

struct ParseStats {
  long env_steps = 0;    // environment interactions consumed by rollouts
  int demos_skipped = 0;
};

struct SubgoalDataset {
  std::vector<SubgoalTransition> transitions;
  std::vector<LowerPair> lower_pairs;
  long epoch = -1;
  std::string parser;
  std::string checkpoint_id;
  double subgoals_per_demo = 0.0;
  int demo_count = 0;

  void save(const std::string& path) const;
  static SubgoalDataset load(const std::string& path);
};

// Adaptive parse of one expert trajectory against the current lower
// primitive. Walks the demo states as successive subgoal probes; when a probe
// fails, the last reachable state is emitted as a subgoal and becomes the new
// initial state, from which the failed probe is retried. A retry that fails
// emits the probe itself (unverified) and advances anyway, so parsing always
// terminates. A trailing transition to the final state is emitted when the
// final probe needed the entire c-step budget (or failed), i.e. whenever the
// demo's end sits at the edge of what the primitive can comfortably reach.
std::vector<SubgoalTransition> pip_parse(const demos::Trajectory& demo, const LowerPolicy& lower,
                                         Env& env, int c, double delta_lo,
                                         ParseStats* stats = nullptr,
                                         std::vector<LowerPair>* pairs_out = nullptr);

// Static baseline: subgoal at every k-th demo state, independent of the
// primitive. Trailing partial windows are dropped; demos shorter than one
// window contribute a single transition to their final state.
std::vector<SubgoalTransition> fixed_window_parse(const demos::Trajectory& demo, int k,
                                                  std::vector<LowerPair>* pairs_out = nullptr);

enum class ParserKind { none, pip, window };
ParserKind parser_from_string(const std::string& s);
std::string parser_to_string(ParserKind k);

// Clears and refills the dataset by parsing every demo with the current
// primitive. Throws Errc::empty_dataset when every demo was skipped.
SubgoalDataset repopulate(const demos::DemoDataset& demos, const LowerPolicy& lower, Env& env,
                          ParserKind parser, int window_k, int c, double delta_lo, long epoch,
                          const std::string& checkpoint_id, ParseStats* stats = nullptr);

}  // namespace crisp::relabel
