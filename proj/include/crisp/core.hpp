#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace crisp {

using Vec = std::vector<double>;
using StateVec = Vec;
using GoalVec = Vec;
using ActionVec = Vec;

// --- errors ---

enum class Errc {
  invalid_argument,
  dimension_mismatch,
  bad_state,
  io,
  planning_failure,
  generation_failure,
  config,
  empty_dataset,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

// --- contracts ---

struct EnvContract {
  int state_dim = 0;
  int goal_dim = 0;
  int action_dim = 0;
  int horizon = 0;
  double step_bound = 0.0;  // max goal-space displacement per primitive step
  Vec goal_low, goal_high;  // axis-aligned goal-space bounding box
  double workspace_diameter = 0.0;
};

struct StepInfo {
  bool collision = false;
  bool clamped = false;
  double dist_to_goal = 0.0;
};

struct EnvStep {
  StateVec next_state;
  bool done = false;
  StepInfo info;
};

// Goal-conditioned deterministic environment. Instances are independent;
// nothing here is shared, so distinct instances may run on distinct threads.
class Env {
 public:
  virtual ~Env() = default;

  virtual const EnvContract& contract() const = 0;
  virtual const std::string& name() const = 0;

  // Seeded initial-state draw; also samples the episode goal.
  virtual StateVec reset(std::uint64_t seed) = 0;

  // Force the internal state; the episode goal is kept. Rejects invalid
  // states with an error naming the violated bound.
  virtual StateVec reset_to(const StateVec& state) = 0;

  virtual EnvStep step(const ActionVec& action) = 0;

  // Pure projection from state space to goal space.
  virtual GoalVec achieved_goal(const StateVec& state) const = 0;

  virtual const StateVec& state() const = 0;
  virtual const GoalVec& goal() const = 0;
  virtual void set_goal(const GoalVec& g) = 0;

  virtual std::unique_ptr<Env> clone() const = 0;

  // Features fed to the lower-level imitation discriminator, derived from a
  // state pair. Dimension 0 means the environment does not support them.
  virtual int lower_feature_dim() const { return 0; }
  virtual Vec lower_expert_feature(const StateVec&, const StateVec&) const {
    throw Error(Errc::invalid_argument, "lower features unsupported for env " + name());
  }
  // Differentiable surrogate of the feature under action `a` taken at `s`
  // (free-space kinematic model). d_feat_d_action is feature_dim x action_dim,
  // row-major, may be null.
  virtual Vec lower_policy_feature(const StateVec&, const ActionVec&,
                                   std::vector<double>* /*d_feat_d_action*/) const {
    throw Error(Errc::invalid_argument, "lower features unsupported for env " + name());
  }

  // Pseudo-action that reproduces the transition s -> s_next under the
  // free-space kinematic model; used by behavior-cloning regularization.
  virtual ActionVec lower_pseudo_action(const StateVec&, const StateVec&) const {
    throw Error(Errc::invalid_argument, "pseudo-actions unsupported for env " + name());
  }
};

// --- shared numerics ---

double l2_distance(const Vec& a, const Vec& b);

// 0 when within delta of the goal (boundary counts as success), else -1.
// Implements both the intrinsic and the extrinsic sparse reward.
double sparse_reward(const GoalVec& achieved, const GoalVec& goal, double delta);

inline double clamp(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }

bool all_finite(const Vec& v);

}  // namespace crisp
