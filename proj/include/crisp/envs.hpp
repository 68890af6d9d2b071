#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>

#include "crisp/core.hpp"

namespace crisp::envs {

// --- four-room maze ---

// Grid layout: one vertical wall (column wall_col) and one horizontal wall
// (row wall_row), each pierced by one gate per segment. wall_col == -1 means
// an open room (no interior walls). Free space is connected by construction.
struct MazeSpec {
  int width = 0, height = 0;
  int wall_col = -1, wall_row = -1;
  // gates[0], gates[1]: x of the gate in the horizontal wall, left/right of
  // the crossing; gates[2], gates[3]: y of the gate in the vertical wall,
  // below/above the crossing.
  std::array<int, 4> gates = {-1, -1, -1, -1};
  double cell_size = 1.0;

  bool open_room() const { return wall_col < 0; }
  bool occupied(int cx, int cy) const;
  bool occupied_at(double x, double y) const;  // world coordinates
  std::string to_json() const;
  static MazeSpec from_json(const std::string& text);
};

// Wall and gate indices sampled uniformly from the interior index ranges;
// deterministic in seed. Requires W, H >= 5.
MazeSpec generate_maze(std::uint64_t seed, int W, int H, double cell_size = 1.0);

// True when all free cells form one connected component (4-neighborhood).
bool maze_connected(const MazeSpec& spec);

// State: [x, y, occupancy(W*H) row-major]. Goal: (x, y). Action: 2-d in
// [-1,1], displacement step_scale per axis, per-axis wall sliding.
class MazeEnv : public Env {
 public:
  struct Params {
    MazeSpec spec;
    double step_scale = 0.25;     // world units per unit action component
    int horizon = 120;
    double success_delta = 0.0;   // 0 -> 0.1 * workspace diameter
    double goal_min_dist = 0.0;   // resample goals closer than this
    // When > 0 each reset draws a layout from a pool of this many generated
    // mazes (seeded pool_seed_base..+pool-1); spec then only fixes the grid
    // shape. Policies see the layout through the occupancy block of the state.
    int maze_pool = 0;
    std::uint64_t pool_seed_base = 0;
  };

  explicit MazeEnv(Params p);

  const EnvContract& contract() const override { return contract_; }
  const std::string& name() const override { return name_; }
  StateVec reset(std::uint64_t seed) override;
  StateVec reset_to(const StateVec& state) override;
  EnvStep step(const ActionVec& action) override;
  GoalVec achieved_goal(const StateVec& state) const override;
  const StateVec& state() const override { return state_; }
  const GoalVec& goal() const override { return goal_; }
  void set_goal(const GoalVec& g) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<MazeEnv>(*this); }

  int lower_feature_dim() const override { return 4; }
  Vec lower_expert_feature(const StateVec& s, const StateVec& s_next) const override;
  Vec lower_policy_feature(const StateVec& s, const ActionVec& a,
                           std::vector<double>* d_feat_da) const override;
  ActionVec lower_pseudo_action(const StateVec& s, const StateVec& s_next) const override;

  const MazeSpec& spec() const { return params_.spec; }
  double step_scale() const { return params_.step_scale; }
  double success_delta() const { return success_delta_; }

 private:
  bool blocked(double x, double y, const StateVec& occ_state) const;

  Params params_;
  std::string name_ = "maze";
  EnvContract contract_;
  StateVec state_;
  GoalVec goal_;
  double success_delta_ = 0.0;
  int t_ = 0;
};

// --- obstacle-free point navigation ---

class PointEnv : public Env {
 public:
  struct Params {
    double size = 4.0;  // workspace [0, size]^2
    double step_scale = 0.25;
    int horizon = 40;
    double success_delta = 0.0;
    double goal_min_dist = 0.0;
  };

  explicit PointEnv(Params p);

  const EnvContract& contract() const override { return contract_; }
  const std::string& name() const override { return name_; }
  StateVec reset(std::uint64_t seed) override;
  StateVec reset_to(const StateVec& state) override;
  EnvStep step(const ActionVec& action) override;
  GoalVec achieved_goal(const StateVec& state) const override;
  const StateVec& state() const override { return state_; }
  const GoalVec& goal() const override { return goal_; }
  void set_goal(const GoalVec& g) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<PointEnv>(*this); }

  int lower_feature_dim() const override { return 4; }
  Vec lower_expert_feature(const StateVec& s, const StateVec& s_next) const override;
  Vec lower_policy_feature(const StateVec& s, const ActionVec& a,
                           std::vector<double>* d_feat_da) const override;
  ActionVec lower_pseudo_action(const StateVec& s, const StateVec& s_next) const override;

 private:
  Params params_;
  std::string name_ = "point";
  EnvContract contract_;
  StateVec state_;
  GoalVec goal_;
  double success_delta_ = 0.0;
  int t_ = 0;
};

// --- planar block pushing ---

// State: [gx, gy, bx, by, rx, ry, vgx, vgy, vbx, vby] where r = block - gripper
// and v are one-step finite-difference velocities. Action: (dx, dy, grip),
// block co-moves while the gripper grips within the contact radius.
class BlockPushEnv : public Env {
 public:
  struct Params {
    double size = 4.0;
    double step_scale = 0.2;
    double contact_radius = 0.0;  // 0 -> 1.5 * step_scale
    int horizon = 50;
    double success_delta = 0.0;
    double goal_min_dist = 0.0;
  };

  explicit BlockPushEnv(Params p);

  const EnvContract& contract() const override { return contract_; }
  const std::string& name() const override { return name_; }
  StateVec reset(std::uint64_t seed) override;
  StateVec reset_to(const StateVec& state) override;
  EnvStep step(const ActionVec& action) override;
  GoalVec achieved_goal(const StateVec& state) const override;
  const StateVec& state() const override { return state_; }
  const GoalVec& goal() const override { return goal_; }
  void set_goal(const GoalVec& g) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<BlockPushEnv>(*this); }

  int lower_feature_dim() const override { return 4; }
  Vec lower_expert_feature(const StateVec& s, const StateVec& s_next) const override;
  Vec lower_policy_feature(const StateVec& s, const ActionVec& a,
                           std::vector<double>* d_feat_da) const override;
  ActionVec lower_pseudo_action(const StateVec& s, const StateVec& s_next) const override;

  double contact_radius() const { return contact_radius_; }
  double step_scale() const { return params_.step_scale; }

 private:
  Params params_;
  std::string name_ = "blockpush";
  EnvContract contract_;
  StateVec state_;
  GoalVec goal_;
  double success_delta_ = 0.0, contact_radius_ = 0.0;
  int t_ = 0;
};

// --- rope of chained points, poked ---

// State: 2J joint coordinates. Action: (x, y, eta) in [-1,1]^3; origin maps
// affinely into the workspace, eta to [-pi, pi]. The joint nearest the poke
// origin (within the influence radius) is displaced by poke_length along eta,
// then link lengths relax by fixed-iteration Jacobi projection.
class RopeEnv : public Env {
 public:
  struct Params {
    int joints = 15;
    double size = 1.0;
    double poke_length = 0.08;
    double influence_radius = 0.1;
    int relax_iters = 10;
    int horizon = 25;
    double success_delta = 0.0;
    int goal_pokes = 8;  // goal configs generated by this many random pokes
  };

  explicit RopeEnv(Params p);

  const EnvContract& contract() const override { return contract_; }
  const std::string& name() const override { return name_; }
  StateVec reset(std::uint64_t seed) override;
  StateVec reset_to(const StateVec& state) override;
  EnvStep step(const ActionVec& action) override;
  GoalVec achieved_goal(const StateVec& state) const override;
  const StateVec& state() const override { return state_; }
  const GoalVec& goal() const override { return goal_; }
  void set_goal(const GoalVec& g) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<RopeEnv>(*this); }

  // Poke with explicit world-space origin and angle (used by the scripted
  // expert; step() maps from normalized actions onto this).
  EnvStep poke(double x, double y, double eta);

  double link_length() const { return link_length_; }
  int joints() const { return params_.joints; }
  double poke_length() const { return params_.poke_length; }

 private:
  StateVec relax(StateVec joints) const;

  Params params_;
  std::string name_ = "rope";
  EnvContract contract_;
  StateVec state_;
  GoalVec goal_;
  double success_delta_ = 0.0, link_length_ = 0.0;
  int t_ = 0;
};

// --- 1-D line world (analytic test environment) ---

class LineEnv : public Env {
 public:
  struct Params {
    double length = 10.0;
    double step_scale = 0.5;
    int horizon = 60;
    double success_delta = 0.25;
  };

  explicit LineEnv(Params p);

  const EnvContract& contract() const override { return contract_; }
  const std::string& name() const override { return name_; }
  StateVec reset(std::uint64_t seed) override;
  StateVec reset_to(const StateVec& state) override;
  EnvStep step(const ActionVec& action) override;
  GoalVec achieved_goal(const StateVec& state) const override;
  const StateVec& state() const override { return state_; }
  const GoalVec& goal() const override { return goal_; }
  void set_goal(const GoalVec& g) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<LineEnv>(*this); }

  int lower_feature_dim() const override { return 2; }
  Vec lower_expert_feature(const StateVec& s, const StateVec& s_next) const override;
  Vec lower_policy_feature(const StateVec& s, const ActionVec& a,
                           std::vector<double>* d_feat_da) const override;
  ActionVec lower_pseudo_action(const StateVec& s, const StateVec& s_next) const override;

 private:
  Params params_;
  std::string name_ = "line";
  EnvContract contract_;
  StateVec state_;
  GoalVec goal_;
  int t_ = 0;
};

// Factory keyed by environment name; params_json may be empty for defaults.
// Recognized names: maze, point, blockpush, rope, line.
std::unique_ptr<Env> make_env(const std::string& name, const std::string& params_json);

}  // namespace crisp::envs
