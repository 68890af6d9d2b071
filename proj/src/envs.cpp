#include "crisp/envs.hpp"

#include <algorithm>
#include <cmath>

#include "crisp/rng.hpp"
#include "json.hpp"

namespace crisp::envs {

using nlohmann::json;

namespace {

double box_diameter(const Vec& lo, const Vec& hi) {
  double s = 0.0;
  for (std::size_t i = 0; i < lo.size(); ++i) s += (hi[i] - lo[i]) * (hi[i] - lo[i]);
  return std::sqrt(s);
}

ActionVec clamp_action(const ActionVec& a, int dim, bool* clamped) {
  require(static_cast<int>(a.size()) == dim, Errc::dimension_mismatch,
          "action dim " + std::to_string(a.size()) + " != " + std::to_string(dim));
  require(all_finite(a), Errc::invalid_argument, "action has non-finite entries");
  ActionVec out(a);
  for (double& x : out) {
    if (x < -1.0 || x > 1.0) {
      *clamped = true;
      x = clamp(x, -1.0, 1.0);
    }
  }
  return out;
}

}  // namespace

// --- MazeSpec ---

bool MazeSpec::occupied(int cx, int cy) const {
  if (cx < 0 || cy < 0 || cx >= width || cy >= height) return true;
  if (open_room()) return false;
  if (cx == wall_col && cy != gates[2] && cy != gates[3]) return true;
  if (cy == wall_row && cx != gates[0] && cx != gates[1]) return true;
  return false;
}

bool MazeSpec::occupied_at(double x, double y) const {
  const int cx = static_cast<int>(std::floor(x / cell_size));
  const int cy = static_cast<int>(std::floor(y / cell_size));
  return occupied(cx, cy);
}

std::string MazeSpec::to_json() const {
  json j;
  j["W"] = width;
  j["H"] = height;
  j["wall_col"] = wall_col;
  j["wall_row"] = wall_row;
  j["gates"] = gates;
  j["cell"] = cell_size;
  return j.dump();
}

MazeSpec MazeSpec::from_json(const std::string& text) {
  json j = json::parse(text);
  MazeSpec s;
  s.width = j.at("W").get<int>();
  s.height = j.at("H").get<int>();
  s.wall_col = j.at("wall_col").get<int>();
  s.wall_row = j.at("wall_row").get<int>();
  auto g = j.at("gates").get<std::vector<int>>();
  require(g.size() == 4, Errc::io, "maze spec: gates must have 4 entries");
  std::copy(g.begin(), g.end(), s.gates.begin());
  s.cell_size = j.value("cell", 1.0);
  return s;
}

MazeSpec generate_maze(std::uint64_t seed, int W, int H, double cell_size) {
  require(W >= 5 && H >= 5, Errc::config,
          "generate_maze: grid must be at least 5x5, got " + std::to_string(W) + "x" +
              std::to_string(H));
  Rng rng(Rng::splitmix(seed));
  MazeSpec s;
  s.width = W;
  s.height = H;
  s.cell_size = cell_size;
  s.wall_col = static_cast<int>(rng.uniform_int(2, W - 3));
  s.wall_row = static_cast<int>(rng.uniform_int(2, H - 3));
  s.gates[0] = static_cast<int>(rng.uniform_int(1, s.wall_col - 1));
  s.gates[1] = static_cast<int>(rng.uniform_int(s.wall_col + 1, W - 2));
  s.gates[2] = static_cast<int>(rng.uniform_int(1, s.wall_row - 1));
  s.gates[3] = static_cast<int>(rng.uniform_int(s.wall_row + 1, H - 2));
  return s;
}

bool maze_connected(const MazeSpec& spec) {
  const int W = spec.width, H = spec.height;
  std::vector<char> seen(static_cast<std::size_t>(W) * H, 0);
  int first = -1, free_count = 0;
  for (int c = 0; c < W * H; ++c) {
    if (!spec.occupied(c % W, c / W)) {
      ++free_count;
      if (first < 0) first = c;
    }
  }
  if (first < 0) return false;
  std::vector<int> stack = {first};
  seen[first] = 1;
  int reached = 0;
  while (!stack.empty()) {
    const int c = stack.back();
    stack.pop_back();
    ++reached;
    const int cx = c % W, cy = c / W;
    const int nbr[4][2] = {{cx + 1, cy}, {cx - 1, cy}, {cx, cy + 1}, {cx, cy - 1}};
    for (auto& n : nbr) {
      if (n[0] < 0 || n[1] < 0 || n[0] >= W || n[1] >= H) continue;
      const int idx = n[1] * W + n[0];
      if (!seen[idx] && !spec.occupied(n[0], n[1])) {
        seen[idx] = 1;
        stack.push_back(idx);
      }
    }
  }
  return reached == free_count;
}

// --- MazeEnv ---

MazeEnv::MazeEnv(Params p) : params_(std::move(p)) {
  const MazeSpec& s = params_.spec;
  require(s.width >= 2 && s.height >= 2, Errc::config, "maze env: bad grid");
  require(params_.step_scale > 0 && params_.step_scale < s.cell_size, Errc::config,
          "maze env: step_scale must be positive and below one cell");
  contract_.state_dim = 2 + s.width * s.height;
  contract_.goal_dim = 2;
  contract_.action_dim = 2;
  contract_.horizon = params_.horizon;
  contract_.step_bound = params_.step_scale * std::sqrt(2.0) + 1e-12;
  contract_.goal_low = {0.0, 0.0};
  contract_.goal_high = {s.width * s.cell_size, s.height * s.cell_size};
  contract_.workspace_diameter = box_diameter(contract_.goal_low, contract_.goal_high);
  success_delta_ =
      params_.success_delta > 0 ? params_.success_delta : 0.1 * contract_.workspace_diameter;
  reset(0);
}

StateVec MazeEnv::reset(std::uint64_t seed) {
  Rng rng(Rng::splitmix(seed ^ 0x6d617a65ull));
  if (params_.maze_pool > 0) {
    const std::uint64_t layout =
        params_.pool_seed_base +
        Rng::splitmix(seed) % static_cast<std::uint64_t>(params_.maze_pool);
    params_.spec = generate_maze(layout, params_.spec.width, params_.spec.height,
                                 params_.spec.cell_size);
  }
  const MazeSpec& s = params_.spec;
  std::vector<std::pair<int, int>> free_cells;
  for (int cy = 0; cy < s.height; ++cy)
    for (int cx = 0; cx < s.width; ++cx)
      if (!s.occupied(cx, cy)) free_cells.push_back({cx, cy});
  require(!free_cells.empty(), Errc::config, "maze env: no free cells");

  auto sample_pos = [&]() {
    auto [cx, cy] = free_cells[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(free_cells.size()) - 1))];
    const double x = (cx + 0.5 + 0.6 * (rng.uniform() - 0.5)) * s.cell_size;
    const double y = (cy + 0.5 + 0.6 * (rng.uniform() - 0.5)) * s.cell_size;
    return std::pair<double, double>{x, y};
  };

  double sx = 0, sy = 0, gx = 0, gy = 0;
  for (int attempt = 0;; ++attempt) {
    std::tie(sx, sy) = sample_pos();
    std::tie(gx, gy) = sample_pos();
    if (std::hypot(gx - sx, gy - sy) >= params_.goal_min_dist) break;
    require(attempt < 10000, Errc::config, "maze env: goal_min_dist unsatisfiable");
  }

  state_.assign(static_cast<std::size_t>(contract_.state_dim), 0.0);
  state_[0] = sx;
  state_[1] = sy;
  for (int cy = 0; cy < s.height; ++cy)
    for (int cx = 0; cx < s.width; ++cx)
      state_[2 + cy * s.width + cx] = s.occupied(cx, cy) ? 1.0 : 0.0;
  goal_ = {gx, gy};
  t_ = 0;
  return state_;
}

bool MazeEnv::blocked(double x, double y, const StateVec& occ_state) const {
  const MazeSpec& s = params_.spec;
  const int cx = static_cast<int>(std::floor(x / s.cell_size));
  const int cy = static_cast<int>(std::floor(y / s.cell_size));
  if (cx < 0 || cy < 0 || cx >= s.width || cy >= s.height) return true;
  return occ_state[2 + static_cast<std::size_t>(cy) * s.width + cx] > 0.5;
}

StateVec MazeEnv::reset_to(const StateVec& state) {
  require(static_cast<int>(state.size()) == contract_.state_dim, Errc::dimension_mismatch,
          "reset_to: state dim " + std::to_string(state.size()) + " != " +
              std::to_string(contract_.state_dim));
  require(all_finite(state), Errc::bad_state, "reset_to: non-finite state entry");
  const MazeSpec& s = params_.spec;
  const double W = s.width * s.cell_size, H = s.height * s.cell_size;
  require(state[0] >= 0.0 && state[0] <= W && state[1] >= 0.0 && state[1] <= H, Errc::bad_state,
          "reset_to: agent position outside workspace [0," + std::to_string(W) + "]x[0," +
              std::to_string(H) + "]");
  for (std::size_t i = 2; i < state.size(); ++i)
    require(std::abs(state[i]) < 1e-9 || std::abs(state[i] - 1.0) < 1e-9, Errc::bad_state,
            "reset_to: occupancy entries must be 0 or 1");
  require(!blocked(state[0], state[1], state), Errc::bad_state,
          "reset_to: agent position inside an occupied cell");
  state_ = state;
  t_ = 0;
  return state_;
}

EnvStep MazeEnv::step(const ActionVec& action) {
  StepInfo info;
  const ActionVec a = clamp_action(action, 2, &info.clamped);
  const MazeSpec& s = params_.spec;
  const double eps = 1e-9;
  const double W = s.width * s.cell_size, H = s.height * s.cell_size;
  double x = state_[0], y = state_[1];

  double nx = x + params_.step_scale * a[0];
  if (nx < eps || nx > W - eps) {
    nx = clamp(nx, eps, W - eps);
    info.collision = true;
  }
  if (blocked(nx, y, state_)) {
    nx = x;
    info.collision = true;
  }
  double ny = y + params_.step_scale * a[1];
  if (ny < eps || ny > H - eps) {
    ny = clamp(ny, eps, H - eps);
    info.collision = true;
  }
  if (blocked(nx, ny, state_)) {
    ny = y;
    info.collision = true;
  }
  state_[0] = nx;
  state_[1] = ny;
  ++t_;

  EnvStep out;
  out.next_state = state_;
  out.info = info;
  out.info.dist_to_goal = l2_distance(achieved_goal(state_), goal_);
  out.done = out.info.dist_to_goal <= success_delta_ || t_ >= contract_.horizon;
  return out;
}

GoalVec MazeEnv::achieved_goal(const StateVec& state) const {
  require(static_cast<int>(state.size()) == contract_.state_dim, Errc::dimension_mismatch,
          "achieved_goal: bad state dim");
  return {state[0], state[1]};
}

void MazeEnv::set_goal(const GoalVec& g) {
  require(static_cast<int>(g.size()) == 2, Errc::dimension_mismatch, "set_goal: dim");
  goal_ = g;
}

Vec MazeEnv::lower_expert_feature(const StateVec& s, const StateVec& s_next) const {
  return {s[0], s[1], s_next[0] - s[0], s_next[1] - s[1]};
}

Vec MazeEnv::lower_policy_feature(const StateVec& s, const ActionVec& a,
                                  std::vector<double>* d) const {
  if (d) {
    d->assign(4 * 2, 0.0);
    (*d)[2 * 2 + 0] = params_.step_scale;
    (*d)[3 * 2 + 1] = params_.step_scale;
  }
  return {s[0], s[1], params_.step_scale * a[0], params_.step_scale * a[1]};
}

ActionVec MazeEnv::lower_pseudo_action(const StateVec& s, const StateVec& s_next) const {
  return {clamp((s_next[0] - s[0]) / params_.step_scale, -1.0, 1.0),
          clamp((s_next[1] - s[1]) / params_.step_scale, -1.0, 1.0)};
}

// --- PointEnv ---

PointEnv::PointEnv(Params p) : params_(p) {
  require(params_.size > 0 && params_.step_scale > 0, Errc::config, "point env: bad params");
  contract_.state_dim = 2;
  contract_.goal_dim = 2;
  contract_.action_dim = 2;
  contract_.horizon = params_.horizon;
  contract_.step_bound = params_.step_scale * std::sqrt(2.0) + 1e-12;
  contract_.goal_low = {0.0, 0.0};
  contract_.goal_high = {params_.size, params_.size};
  contract_.workspace_diameter = box_diameter(contract_.goal_low, contract_.goal_high);
  success_delta_ =
      params_.success_delta > 0 ? params_.success_delta : 0.1 * contract_.workspace_diameter;
  reset(0);
}

StateVec PointEnv::reset(std::uint64_t seed) {
  Rng rng(Rng::splitmix(seed ^ 0x706f696eull));
  state_ = {rng.uniform(0.0, params_.size), rng.uniform(0.0, params_.size)};
  for (int attempt = 0;; ++attempt) {
    goal_ = {rng.uniform(0.0, params_.size), rng.uniform(0.0, params_.size)};
    if (l2_distance(goal_, state_) >= params_.goal_min_dist) break;
    require(attempt < 10000, Errc::config, "point env: goal_min_dist unsatisfiable");
  }
  t_ = 0;
  return state_;
}

StateVec PointEnv::reset_to(const StateVec& state) {
  require(static_cast<int>(state.size()) == 2, Errc::dimension_mismatch, "reset_to: state dim");
  require(all_finite(state), Errc::bad_state, "reset_to: non-finite state entry");
  require(state[0] >= 0 && state[0] <= params_.size && state[1] >= 0 && state[1] <= params_.size,
          Errc::bad_state, "reset_to: position outside workspace");
  state_ = state;
  t_ = 0;
  return state_;
}

EnvStep PointEnv::step(const ActionVec& action) {
  StepInfo info;
  const ActionVec a = clamp_action(action, 2, &info.clamped);
  for (int i = 0; i < 2; ++i) {
    double n = state_[i] + params_.step_scale * a[i];
    if (n < 0 || n > params_.size) {
      info.collision = true;
      n = clamp(n, 0.0, params_.size);
    }
    state_[i] = n;
  }
  ++t_;
  EnvStep out;
  out.next_state = state_;
  out.info = info;
  out.info.dist_to_goal = l2_distance(state_, goal_);
  out.done = out.info.dist_to_goal <= success_delta_ || t_ >= contract_.horizon;
  return out;
}

GoalVec PointEnv::achieved_goal(const StateVec& state) const {
  require(state.size() == 2, Errc::dimension_mismatch, "achieved_goal: bad state dim");
  return state;
}

void PointEnv::set_goal(const GoalVec& g) {
  require(g.size() == 2, Errc::dimension_mismatch, "set_goal: dim");
  goal_ = g;
}

Vec PointEnv::lower_expert_feature(const StateVec& s, const StateVec& n) const {
  return {s[0], s[1], n[0] - s[0], n[1] - s[1]};
}

Vec PointEnv::lower_policy_feature(const StateVec& s, const ActionVec& a,
                                   std::vector<double>* d) const {
  if (d) {
    d->assign(4 * 2, 0.0);
    (*d)[2 * 2 + 0] = params_.step_scale;
    (*d)[3 * 2 + 1] = params_.step_scale;
  }
  return {s[0], s[1], params_.step_scale * a[0], params_.step_scale * a[1]};
}

ActionVec PointEnv::lower_pseudo_action(const StateVec& s, const StateVec& n) const {
  return {clamp((n[0] - s[0]) / params_.step_scale, -1.0, 1.0),
          clamp((n[1] - s[1]) / params_.step_scale, -1.0, 1.0)};
}

// --- BlockPushEnv ---

BlockPushEnv::BlockPushEnv(Params p) : params_(p) {
  require(params_.size > 0 && params_.step_scale > 0, Errc::config, "blockpush env: bad params");
  contact_radius_ =
      params_.contact_radius > 0 ? params_.contact_radius : 1.5 * params_.step_scale;
  contract_.state_dim = 10;
  contract_.goal_dim = 2;
  contract_.action_dim = 3;
  contract_.horizon = params_.horizon;
  contract_.step_bound = params_.step_scale * std::sqrt(2.0) + 1e-12;
  contract_.goal_low = {0.0, 0.0};
  contract_.goal_high = {params_.size, params_.size};
  contract_.workspace_diameter = box_diameter(contract_.goal_low, contract_.goal_high);
  success_delta_ =
      params_.success_delta > 0 ? params_.success_delta : 0.1 * contract_.workspace_diameter;
  reset(0);
}

StateVec BlockPushEnv::reset(std::uint64_t seed) {
  Rng rng(Rng::splitmix(seed ^ 0x626c6f63ull));
  const double m = 0.1 * params_.size;
  const double gx = rng.uniform(m, params_.size - m), gy = rng.uniform(m, params_.size - m);
  const double bx = rng.uniform(m, params_.size - m), by = rng.uniform(m, params_.size - m);
  for (int attempt = 0;; ++attempt) {
    goal_ = {rng.uniform(m, params_.size - m), rng.uniform(m, params_.size - m)};
    if (std::hypot(goal_[0] - bx, goal_[1] - by) >= params_.goal_min_dist) break;
    require(attempt < 10000, Errc::config, "blockpush env: goal_min_dist unsatisfiable");
  }
  state_ = {gx, gy, bx, by, bx - gx, by - gy, 0, 0, 0, 0};
  t_ = 0;
  return state_;
}

StateVec BlockPushEnv::reset_to(const StateVec& state) {
  require(static_cast<int>(state.size()) == 10, Errc::dimension_mismatch, "reset_to: state dim");
  require(all_finite(state), Errc::bad_state, "reset_to: non-finite state entry");
  for (int i = 0; i < 4; ++i)
    require(state[i] >= 0 && state[i] <= params_.size, Errc::bad_state,
            "reset_to: position outside workspace [0," + std::to_string(params_.size) + "]");
  require(std::abs(state[4] - (state[2] - state[0])) < 1e-9 &&
              std::abs(state[5] - (state[3] - state[1])) < 1e-9,
          Errc::bad_state, "reset_to: block_rel inconsistent with positions");
  state_ = state;
  t_ = 0;
  return state_;
}

EnvStep BlockPushEnv::step(const ActionVec& action) {
  StepInfo info;
  const ActionVec a = clamp_action(action, 3, &info.clamped);
  const double gx = state_[0], gy = state_[1], bx = state_[2], by = state_[3];
  const bool attached = std::hypot(bx - gx, by - gy) <= contact_radius_ && a[2] > 0.0;

  double ngx = gx + params_.step_scale * a[0];
  double ngy = gy + params_.step_scale * a[1];
  if (ngx < 0 || ngx > params_.size || ngy < 0 || ngy > params_.size) info.collision = true;
  ngx = clamp(ngx, 0.0, params_.size);
  ngy = clamp(ngy, 0.0, params_.size);

  double nbx = bx, nby = by;
  if (attached) {
    nbx = clamp(bx + (ngx - gx), 0.0, params_.size);
    nby = clamp(by + (ngy - gy), 0.0, params_.size);
  }
  state_ = {ngx, ngy, nbx, nby, nbx - ngx, nby - ngy, ngx - gx, ngy - gy, nbx - bx, nby - by};
  ++t_;

  EnvStep out;
  out.next_state = state_;
  out.info = info;
  out.info.dist_to_goal = l2_distance(achieved_goal(state_), goal_);
  out.done = out.info.dist_to_goal <= success_delta_ || t_ >= contract_.horizon;
  return out;
}

GoalVec BlockPushEnv::achieved_goal(const StateVec& state) const {
  require(state.size() == 10, Errc::dimension_mismatch, "achieved_goal: bad state dim");
  return {state[2], state[3]};
}

void BlockPushEnv::set_goal(const GoalVec& g) {
  require(g.size() == 2, Errc::dimension_mismatch, "set_goal: dim");
  goal_ = g;
}

Vec BlockPushEnv::lower_expert_feature(const StateVec& s, const StateVec& n) const {
  return {s[0], s[1], n[0] - s[0], n[1] - s[1]};
}

Vec BlockPushEnv::lower_policy_feature(const StateVec& s, const ActionVec& a,
                                       std::vector<double>* d) const {
  if (d) {
    d->assign(4 * 3, 0.0);
    (*d)[2 * 3 + 0] = params_.step_scale;
    (*d)[3 * 3 + 1] = params_.step_scale;
  }
  return {s[0], s[1], params_.step_scale * a[0], params_.step_scale * a[1]};
}

ActionVec BlockPushEnv::lower_pseudo_action(const StateVec& s, const StateVec& n) const {
  const bool block_moved = std::hypot(n[2] - s[2], n[3] - s[3]) > 1e-12;
  return {clamp((n[0] - s[0]) / params_.step_scale, -1.0, 1.0),
          clamp((n[1] - s[1]) / params_.step_scale, -1.0, 1.0), block_moved ? 1.0 : -1.0};
}

// --- RopeEnv ---

RopeEnv::RopeEnv(Params p) : params_(p) {
  require(params_.joints >= 3 && params_.size > 0, Errc::config, "rope env: bad params");
  link_length_ = params_.size / 20.0;
  const int J = params_.joints;
  contract_.state_dim = 2 * J;
  contract_.goal_dim = 2 * J;
  contract_.action_dim = 3;
  contract_.horizon = params_.horizon;
  contract_.step_bound = params_.poke_length * std::sqrt(static_cast<double>(J)) + 1e-9;
  contract_.goal_low.assign(static_cast<std::size_t>(2 * J), 0.0);
  contract_.goal_high.assign(static_cast<std::size_t>(2 * J), params_.size);
  contract_.workspace_diameter = box_diameter(contract_.goal_low, contract_.goal_high);
  success_delta_ =
      params_.success_delta > 0 ? params_.success_delta : 0.1 * contract_.workspace_diameter;
  reset(0);
}

StateVec RopeEnv::reset(std::uint64_t seed) {
  Rng rng(Rng::splitmix(seed ^ 0x726f7065ull));
  const int J = params_.joints;
  StateVec joints(static_cast<std::size_t>(2 * J));
  // Random smooth chain, then translate fully inside the workspace.
  double heading = rng.uniform(0.0, 2.0 * M_PI);
  double x = 0.0, y = 0.0;
  double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
  for (int j = 0; j < J; ++j) {
    joints[2 * j] = x;
    joints[2 * j + 1] = y;
    min_x = std::min(min_x, x);
    max_x = std::max(max_x, x);
    min_y = std::min(min_y, y);
    max_y = std::max(max_y, y);
    heading += rng.uniform(-0.5, 0.5);
    x += link_length_ * std::cos(heading);
    y += link_length_ * std::sin(heading);
  }
  const double margin = 2.0 * link_length_;
  const double ox = rng.uniform(margin - min_x, params_.size - margin - max_x);
  const double oy = rng.uniform(margin - min_y, params_.size - margin - max_y);
  for (int j = 0; j < J; ++j) {
    joints[2 * j] += ox;
    joints[2 * j + 1] += oy;
  }
  state_ = joints;
  t_ = 0;

  // Goal: evolve a copy by random pokes so the target stays reachable.
  StateVec g = joints;
  for (int k = 0; k < params_.goal_pokes; ++k) {
    const int j = static_cast<int>(rng.uniform_int(0, J - 1));
    const double eta = rng.uniform(-M_PI, M_PI);
    StateVec tmp = g;
    tmp[2 * j] += params_.poke_length * std::cos(eta);
    tmp[2 * j + 1] += params_.poke_length * std::sin(eta);
    g = relax(std::move(tmp));
  }
  goal_ = g;
  return state_;
}

StateVec RopeEnv::reset_to(const StateVec& state) {
  require(static_cast<int>(state.size()) == contract_.state_dim, Errc::dimension_mismatch,
          "reset_to: state dim");
  require(all_finite(state), Errc::bad_state, "reset_to: non-finite state entry");
  for (double v : state)
    require(v >= 0.0 && v <= params_.size, Errc::bad_state,
            "reset_to: joint outside workspace [0," + std::to_string(params_.size) + "]");
  for (int j = 0; j + 1 < params_.joints; ++j) {
    const double len = std::hypot(state[2 * j + 2] - state[2 * j], state[2 * j + 3] - state[2 * j + 1]);
    require(len >= 0.4 * link_length_ && len <= 1.6 * link_length_, Errc::bad_state,
            "reset_to: link " + std::to_string(j) + " spacing " + std::to_string(len) +
                " violates chain bounds");
  }
  state_ = state;
  t_ = 0;
  return state_;
}

StateVec RopeEnv::relax(StateVec joints) const {
  const int J = params_.joints;
  std::vector<double> corr(static_cast<std::size_t>(2 * J));
  for (int it = 0; it < params_.relax_iters; ++it) {
    std::fill(corr.begin(), corr.end(), 0.0);
    for (int j = 0; j + 1 < J; ++j) {
      const double dx = joints[2 * j + 2] - joints[2 * j];
      const double dy = joints[2 * j + 3] - joints[2 * j + 1];
      const double len = std::hypot(dx, dy);
      if (len < 1e-12) continue;
      const double diff = 0.5 * (len - link_length_) / len;
      corr[2 * j] += diff * dx;
      corr[2 * j + 1] += diff * dy;
      corr[2 * j + 2] -= diff * dx;
      corr[2 * j + 3] -= diff * dy;
    }
    for (int i = 0; i < 2 * J; ++i) joints[i] = clamp(joints[i] + corr[i], 0.0, params_.size);
  }
  return joints;
}

EnvStep RopeEnv::poke(double x, double y, double eta) {
  StepInfo info;
  if (x < 0 || x > params_.size || y < 0 || y > params_.size) {
    info.clamped = true;
    x = clamp(x, 0.0, params_.size);
    y = clamp(y, 0.0, params_.size);
  }
  int nearest = -1;
  double best = params_.influence_radius;
  for (int j = 0; j < params_.joints; ++j) {
    const double d = std::hypot(state_[2 * j] - x, state_[2 * j + 1] - y);
    if (d <= best) {
      best = d;
      nearest = j;
    }
  }
  if (nearest >= 0) {
    StateVec moved = state_;
    moved[2 * nearest] =
        clamp(moved[2 * nearest] + params_.poke_length * std::cos(eta), 0.0, params_.size);
    moved[2 * nearest + 1] =
        clamp(moved[2 * nearest + 1] + params_.poke_length * std::sin(eta), 0.0, params_.size);
    state_ = relax(std::move(moved));
  }
  ++t_;

  EnvStep out;
  out.next_state = state_;
  out.info = info;
  out.info.dist_to_goal = l2_distance(state_, goal_);
  out.done = out.info.dist_to_goal <= success_delta_ || t_ >= contract_.horizon;
  return out;
}

EnvStep RopeEnv::step(const ActionVec& action) {
  StepInfo info;
  const ActionVec a = clamp_action(action, 3, &info.clamped);
  const double x = (a[0] + 1.0) * 0.5 * params_.size;
  const double y = (a[1] + 1.0) * 0.5 * params_.size;
  const double eta = a[2] * M_PI;
  EnvStep out = poke(x, y, eta);
  out.info.clamped = out.info.clamped || info.clamped;
  return out;
}

GoalVec RopeEnv::achieved_goal(const StateVec& state) const {
  require(static_cast<int>(state.size()) == contract_.state_dim, Errc::dimension_mismatch,
          "achieved_goal: bad state dim");
  return state;
}

void RopeEnv::set_goal(const GoalVec& g) {
  require(static_cast<int>(g.size()) == contract_.goal_dim, Errc::dimension_mismatch,
          "set_goal: dim");
  goal_ = g;
}

// --- LineEnv ---

LineEnv::LineEnv(Params p) : params_(p) {
  require(params_.length > 0 && params_.step_scale > 0, Errc::config, "line env: bad params");
  contract_.state_dim = 1;
  contract_.goal_dim = 1;
  contract_.action_dim = 1;
  contract_.horizon = params_.horizon;
  contract_.step_bound = params_.step_scale + 1e-12;
  contract_.goal_low = {0.0};
  contract_.goal_high = {params_.length};
  contract_.workspace_diameter = params_.length;
  reset(0);
}

StateVec LineEnv::reset(std::uint64_t seed) {
  Rng rng(Rng::splitmix(seed ^ 0x6c696e65ull));
  state_ = {rng.uniform(0.0, params_.length)};
  goal_ = {rng.uniform(0.0, params_.length)};
  t_ = 0;
  return state_;
}

StateVec LineEnv::reset_to(const StateVec& state) {
  require(state.size() == 1, Errc::dimension_mismatch, "reset_to: state dim");
  require(all_finite(state), Errc::bad_state, "reset_to: non-finite state entry");
  require(state[0] >= 0 && state[0] <= params_.length, Errc::bad_state,
          "reset_to: position outside [0," + std::to_string(params_.length) + "]");
  state_ = state;
  t_ = 0;
  return state_;
}

EnvStep LineEnv::step(const ActionVec& action) {
  StepInfo info;
  const ActionVec a = clamp_action(action, 1, &info.clamped);
  state_[0] = clamp(state_[0] + params_.step_scale * a[0], 0.0, params_.length);
  ++t_;
  EnvStep out;
  out.next_state = state_;
  out.info = info;
  out.info.dist_to_goal = std::abs(state_[0] - goal_[0]);
  out.done = out.info.dist_to_goal <= params_.success_delta || t_ >= contract_.horizon;
  return out;
}

GoalVec LineEnv::achieved_goal(const StateVec& state) const {
  require(state.size() == 1, Errc::dimension_mismatch, "achieved_goal: bad state dim");
  return state;
}

void LineEnv::set_goal(const GoalVec& g) {
  require(g.size() == 1, Errc::dimension_mismatch, "set_goal: dim");
  goal_ = g;
}

Vec LineEnv::lower_expert_feature(const StateVec& s, const StateVec& n) const {
  return {s[0], n[0] - s[0]};
}

Vec LineEnv::lower_policy_feature(const StateVec& s, const ActionVec& a,
                                  std::vector<double>* d) const {
  if (d) {
    d->assign(2, 0.0);
    (*d)[1] = params_.step_scale;
  }
  return {s[0], params_.step_scale * a[0]};
}

ActionVec LineEnv::lower_pseudo_action(const StateVec& s, const StateVec& n) const {
  return {clamp((n[0] - s[0]) / params_.step_scale, -1.0, 1.0)};
}

// --- factory ---

std::unique_ptr<Env> make_env(const std::string& name, const std::string& params_json) {
  json j = params_json.empty() ? json::object() : json::parse(params_json);
  if (name == "maze") {
    MazeEnv::Params p;
    if (j.contains("spec")) {
      p.spec = MazeSpec::from_json(j["spec"].dump());
    } else {
      p.spec = generate_maze(j.value("layout_seed", 0ull), j.value("width", 8),
                             j.value("height", 8), j.value("cell", 1.0));
    }
    p.step_scale = j.value("step_scale", 0.25);
    p.horizon = j.value("horizon", 120);
    p.success_delta = j.value("success_delta", 0.0);
    p.goal_min_dist = j.value("goal_min_dist", 0.0);
    p.maze_pool = j.value("maze_pool", 0);
    p.pool_seed_base = j.value("pool_seed_base", 0ull);
    return std::make_unique<MazeEnv>(std::move(p));
  }
  if (name == "point") {
    PointEnv::Params p;
    p.size = j.value("size", 4.0);
    p.step_scale = j.value("step_scale", 0.25);
    p.horizon = j.value("horizon", 40);
    p.success_delta = j.value("success_delta", 0.0);
    p.goal_min_dist = j.value("goal_min_dist", 0.0);
    return std::make_unique<PointEnv>(p);
  }
  if (name == "blockpush") {
    BlockPushEnv::Params p;
    p.size = j.value("size", 4.0);
    p.step_scale = j.value("step_scale", 0.2);
    p.contact_radius = j.value("contact_radius", 0.0);
    p.horizon = j.value("horizon", 50);
    p.success_delta = j.value("success_delta", 0.0);
    p.goal_min_dist = j.value("goal_min_dist", 0.0);
    return std::make_unique<BlockPushEnv>(p);
  }
  if (name == "rope") {
    RopeEnv::Params p;
    p.joints = j.value("joints", 15);
    p.size = j.value("size", 1.0);
    p.poke_length = j.value("poke_length", 0.08);
    p.influence_radius = j.value("influence_radius", 0.1);
    p.relax_iters = j.value("relax_iters", 10);
    p.horizon = j.value("horizon", 25);
    p.success_delta = j.value("success_delta", 0.0);
    p.goal_pokes = j.value("goal_pokes", 8);
    return std::make_unique<RopeEnv>(p);
  }
  if (name == "line") {
    LineEnv::Params p;
    p.length = j.value("length", 10.0);
    p.step_scale = j.value("step_scale", 0.5);
    p.horizon = j.value("horizon", 60);
    p.success_delta = j.value("success_delta", 0.25);
    return std::make_unique<LineEnv>(p);
  }
  throw Error(Errc::invalid_argument, "unknown environment: " + name);
}

}  // namespace crisp::envs
