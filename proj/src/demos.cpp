#include "crisp/demos.hpp"

#include <cmath>
#include <fstream>

#include "crisp/rng.hpp"
#include "json.hpp"

namespace crisp::demos {

using nlohmann::json;

namespace {

// Exact segment collision test: visit every grid cell the segment crosses
// (Amanatides-Woo traversal) and reject when any is occupied.
bool segment_free(const envs::MazeSpec& maze, double x0, double y0, double x1, double y1) {
  if (maze.open_room()) return true;
  const double cs = maze.cell_size;
  int cx = static_cast<int>(std::floor(x0 / cs));
  int cy = static_cast<int>(std::floor(y0 / cs));
  const int ex = static_cast<int>(std::floor(x1 / cs));
  const int ey = static_cast<int>(std::floor(y1 / cs));
  if (maze.occupied(cx, cy)) return false;
  const double dx = x1 - x0, dy = y1 - y0;
  const int step_x = dx > 0 ? 1 : -1, step_y = dy > 0 ? 1 : -1;
  double t_max_x = dx != 0.0
                       ? ((dx > 0 ? (cx + 1) * cs - x0 : x0 - cx * cs) / std::abs(dx))
                       : std::numeric_limits<double>::max();
  double t_max_y = dy != 0.0
                       ? ((dy > 0 ? (cy + 1) * cs - y0 : y0 - cy * cs) / std::abs(dy))
                       : std::numeric_limits<double>::max();
  const double t_dx = dx != 0.0 ? cs / std::abs(dx) : std::numeric_limits<double>::max();
  const double t_dy = dy != 0.0 ? cs / std::abs(dy) : std::numeric_limits<double>::max();
  while (cx != ex || cy != ey) {
    if (t_max_x <= t_max_y) {
      cx += step_x;
      t_max_x += t_dx;
    } else {
      cy += step_y;
      t_max_y += t_dy;
    }
    if (maze.occupied(cx, cy)) return false;
    if (t_max_x > 2.0 && t_max_y > 2.0) break;  // numeric guard past the segment end
  }
  return true;
}

StateVec maze_state(const envs::MazeSpec& maze, double x, double y) {
  StateVec s(static_cast<std::size_t>(2 + maze.width * maze.height), 0.0);
  s[0] = x;
  s[1] = y;
  for (int cy = 0; cy < maze.height; ++cy)
    for (int cx = 0; cx < maze.width; ++cx)
      s[2 + cy * maze.width + cx] = maze.occupied(cx, cy) ? 1.0 : 0.0;
  return s;
}

void densify(std::vector<std::pair<double, double>>& pts, double max_axis_step) {
  std::vector<std::pair<double, double>> out;
  out.push_back(pts.front());
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const auto [x0, y0] = out.back();
    const auto [x1, y1] = pts[i];
    const double span = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
    const int n = std::max(1, static_cast<int>(std::ceil(span / max_axis_step)));
    for (int k = 1; k <= n; ++k) {
      const double t = static_cast<double>(k) / n;
      out.push_back({x0 + t * (x1 - x0), y0 + t * (y1 - y0)});
    }
  }
  pts = std::move(out);
}

}  // namespace

Trajectory rrt_plan(const envs::MazeSpec& maze, const GoalVec& start, const GoalVec& goal,
                    std::uint64_t seed, const RrtParams& params) {
  require(start.size() == 2 && goal.size() == 2, Errc::dimension_mismatch,
          "rrt_plan: start/goal must be 2-d");
  require(!maze.occupied_at(start[0], start[1]), Errc::invalid_argument,
          "rrt_plan: start inside an occupied cell");
  require(!maze.occupied_at(goal[0], goal[1]), Errc::invalid_argument,
          "rrt_plan: goal inside an occupied cell");

  const double W = maze.width * maze.cell_size, H = maze.height * maze.cell_size;
  Rng rng(Rng::splitmix(seed ^ 0x727274ull));

  std::vector<std::pair<double, double>> nodes = {{start[0], start[1]}};
  std::vector<int> parent = {-1};
  int goal_node = -1;
  const double goal_dist = std::hypot(goal[0] - start[0], goal[1] - start[1]);
  if (goal_dist < 1e-12) {
    goal_node = 0;
  }

  while (goal_node < 0) {
    if (static_cast<int>(nodes.size()) >= params.node_cap)
      throw Error(Errc::planning_failure,
                  "rrt_plan: node cap " + std::to_string(params.node_cap) + " reached");
    double tx, ty;
    if (rng.uniform() < params.goal_bias) {
      tx = goal[0];
      ty = goal[1];
    } else {
      tx = rng.uniform(0.0, W);
      ty = rng.uniform(0.0, H);
    }
    int nearest = 0;
    double best = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double d = std::hypot(nodes[i].first - tx, nodes[i].second - ty);
      if (d < best) {
        best = d;
        nearest = static_cast<int>(i);
      }
    }
    if (best < 1e-12) continue;
    const double scale = std::min(1.0, params.extension_step / best);
    const double nx = nodes[nearest].first + scale * (tx - nodes[nearest].first);
    const double ny = nodes[nearest].second + scale * (ty - nodes[nearest].second);
    if (maze.occupied_at(nx, ny)) continue;
    if (!segment_free(maze, nodes[nearest].first, nodes[nearest].second, nx, ny)) continue;
    nodes.push_back({nx, ny});
    parent.push_back(nearest);
    if (std::hypot(goal[0] - nx, goal[1] - ny) <= params.extension_step &&
        segment_free(maze, nx, ny, goal[0], goal[1])) {
      nodes.push_back({goal[0], goal[1]});
      parent.push_back(static_cast<int>(nodes.size()) - 2);
      goal_node = static_cast<int>(nodes.size()) - 1;
    }
  }

  std::vector<std::pair<double, double>> path;
  for (int n = goal_node; n >= 0; n = parent[n]) path.push_back(nodes[n]);
  std::reverse(path.begin(), path.end());

  // Shortcut smoothing: greedily connect each waypoint to the farthest
  // visible successor.
  for (int pass = 0; pass < params.smooth_passes && path.size() > 2; ++pass) {
    std::vector<std::pair<double, double>> smooth;
    std::size_t i = 0;
    smooth.push_back(path[0]);
    while (i + 1 < path.size()) {
      std::size_t j = path.size() - 1;
      for (; j > i + 1; --j) {
        if (segment_free(maze, path[i].first, path[i].second, path[j].first, path[j].second))
          break;
      }
      smooth.push_back(path[j]);
      i = j;
    }
    path = std::move(smooth);
  }

  densify(path, params.densify_step);
  if (path.size() < 2) path.push_back(path.back());

  Trajectory traj;
  traj.env_id = "maze";
  traj.goal = goal;
  traj.states.reserve(path.size());
  for (auto& [x, y] : path) traj.states.push_back(maze_state(maze, x, y));
  return traj;
}

Trajectory scripted_push_expert(envs::BlockPushEnv& env, std::uint64_t seed) {
  StateVec s = env.reset(seed);
  const GoalVec goal = env.goal();
  const double step = env.step_scale();
  Trajectory traj;
  traj.env_id = env.name();
  traj.goal = goal;
  traj.states.push_back(s);

  bool success = l2_distance(env.achieved_goal(s), goal) <= 1e-9;
  for (int t = 0; t < env.contract().horizon && !success; ++t) {
    const double gx = s[0], gy = s[1], bx = s[2], by = s[3];
    ActionVec a(3, 0.0);
    if (std::hypot(bx - gx, by - gy) > 0.5 * env.contact_radius()) {
      a = {clamp((bx - gx) / step, -1.0, 1.0), clamp((by - gy) / step, -1.0, 1.0), -1.0};
    } else {
      a = {clamp((goal[0] - gx) / step, -1.0, 1.0), clamp((goal[1] - gy) / step, -1.0, 1.0), 1.0};
    }
    EnvStep out = env.step(a);
    s = out.next_state;
    traj.states.push_back(s);
    success = out.info.dist_to_goal <= 1e-9 || out.done;
    if (out.done && out.info.dist_to_goal > env.contract().workspace_diameter * 0.1) {
      // Horizon hit without reaching the goal region.
      throw Error(Errc::generation_failure, "scripted_push_expert: horizon exhausted");
    }
    if (out.done) break;
  }
  return traj;
}

Trajectory rope_poke_expert(envs::RopeEnv& env, const GoalVec& goal_config, std::uint64_t seed,
                            int max_pokes) {
  StateVec s = env.reset(seed);
  env.set_goal(goal_config);
  const int J = env.joints();
  Trajectory traj;
  traj.env_id = env.name();
  traj.goal = goal_config;
  traj.states.push_back(s);

  for (int k = 0; k < max_pokes; ++k) {
    int m = 0;
    double best = -1.0;
    for (int j = 0; j < J; ++j) {
      const double d = std::hypot(goal_config[2 * j] - s[2 * j], goal_config[2 * j + 1] - s[2 * j + 1]);
      if (d > best) {
        best = d;
        m = j;
      }
    }
    if (best <= env.poke_length()) break;
    const double eta = std::atan2(goal_config[2 * m + 1] - s[2 * m + 1], goal_config[2 * m] - s[2 * m]);
    EnvStep out = env.poke(s[2 * m], s[2 * m + 1], eta);
    s = out.next_state;
    traj.states.push_back(s);
    if (out.done) break;
  }
  if (traj.states.size() < 2) traj.states.push_back(traj.states.back());
  return traj;
}

DemoDataset generate_demos(const std::string& env_name, const std::string& params_json, int count,
                           std::uint64_t seed, bool keep_failures) {
  require(count >= 0, Errc::invalid_argument, "generate_demos: negative count");
  auto env = envs::make_env(env_name, params_json);
  DemoDataset ds;
  ds.env_id = env_name;
  ds.seed = seed;
  ds.state_dim = env->contract().state_dim;
  ds.goal_dim = env->contract().goal_dim;

  std::uint64_t instance = 0;
  int attempts_left = count * 20 + 100;
  while (static_cast<int>(ds.trajectories.size()) < count && attempts_left-- > 0) {
    const std::uint64_t inst_seed = Rng::splitmix(seed + 0x9e37u + instance++);
    try {
      Trajectory traj;
      if (env_name == "maze") {
        auto* maze = dynamic_cast<envs::MazeEnv*>(env.get());
        maze->reset(inst_seed);
        ds.generator = "rrt";
        traj = rrt_plan(maze->spec(), maze->achieved_goal(maze->state()), maze->goal(), inst_seed,
                        RrtParams{.densify_step = maze->step_scale()});
      } else if (env_name == "blockpush") {
        ds.generator = "scripted_push";
        traj = scripted_push_expert(*dynamic_cast<envs::BlockPushEnv*>(env.get()), inst_seed);
      } else if (env_name == "rope") {
        auto* rope = dynamic_cast<envs::RopeEnv*>(env.get());
        rope->reset(inst_seed);
        ds.generator = "farthest_pair_poker";
        const GoalVec goal = rope->goal();
        traj = rope_poke_expert(*rope, goal, inst_seed);
        if (!keep_failures && l2_distance(traj.states.back(), goal) >
                                  0.1 * rope->contract().workspace_diameter)
          continue;
      } else if (env_name == "point" || env_name == "line") {
        ds.generator = "straight_line";
        env->reset(inst_seed);
        const StateVec start = env->state();
        const GoalVec goal = env->goal();
        traj.env_id = env_name;
        traj.goal = goal;
        const double span = l2_distance(start, goal);
        const int n = std::max(1, static_cast<int>(std::ceil(span / (0.9 * env->contract().step_bound))));
        for (int i = 0; i <= n; ++i) {
          StateVec s(start.size());
          for (std::size_t d = 0; d < s.size(); ++d)
            s[d] = start[d] + (goal[d] - start[d]) * i / n;
          traj.states.push_back(std::move(s));
        }
        if (traj.states.size() < 2) traj.states.push_back(traj.states.back());
      } else {
        throw Error(Errc::invalid_argument, "generate_demos: unsupported env " + env_name);
      }
      ds.trajectories.push_back(std::move(traj));
    } catch (const Error& e) {
      if (e.code() == Errc::planning_failure || e.code() == Errc::generation_failure) {
        if (keep_failures) throw;
        continue;  // resample with the next instance seed
      }
      throw;
    }
  }
  require(static_cast<int>(ds.trajectories.size()) == count, Errc::generation_failure,
          "generate_demos: could not generate " + std::to_string(count) + " trajectories");
  return ds;
}

void save_dataset(const DemoDataset& ds, const std::string& path) {
  std::ofstream f(path);
  require(f.good(), Errc::io, "save_dataset: cannot open " + path);
  json header;
  header["version"] = 1;
  header["state_dim"] = ds.state_dim;
  header["goal_dim"] = ds.goal_dim;
  header["count"] = ds.trajectories.size();
  header["generator"] = ds.generator;
  header["seed"] = ds.seed;
  f << header.dump() << "\n";
  for (const Trajectory& t : ds.trajectories) {
    json line;
    line["env"] = t.env_id.empty() ? ds.env_id : t.env_id;
    line["goal"] = t.goal;
    line["states"] = t.states;
    f << line.dump() << "\n";
  }
  require(f.good(), Errc::io, "save_dataset: write failure on " + path);
}

DemoDataset load_dataset(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), Errc::io, "load_dataset: cannot open " + path);
  std::string line;
  int lineno = 0;
  auto parse_line = [&](const std::string& text) {
    try {
      return json::parse(text);
    } catch (const json::exception& e) {
      throw Error(Errc::io, "load_dataset: parse error at line " + std::to_string(lineno) + ": " +
                                e.what());
    }
  };

  require(static_cast<bool>(std::getline(f, line)), Errc::io,
          "load_dataset: missing header line in " + path);
  ++lineno;
  json header = parse_line(line);
  require(header.value("version", -1) == 1, Errc::io,
          "load_dataset: unsupported version at line 1");

  DemoDataset ds;
  ds.state_dim = header.at("state_dim").get<int>();
  ds.goal_dim = header.at("goal_dim").get<int>();
  ds.generator = header.value("generator", "");
  ds.seed = header.value("seed", 0ull);
  const std::size_t count = header.at("count").get<std::size_t>();

  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_line(line);
    Trajectory t;
    t.env_id = j.at("env").get<std::string>();
    t.goal = j.at("goal").get<Vec>();
    t.states = j.at("states").get<std::vector<Vec>>();
    require(static_cast<int>(t.goal.size()) == ds.goal_dim, Errc::dimension_mismatch,
            "load_dataset: goal dim mismatch at line " + std::to_string(lineno));
    for (const StateVec& s : t.states)
      require(static_cast<int>(s.size()) == ds.state_dim, Errc::dimension_mismatch,
              "load_dataset: state dim mismatch at line " + std::to_string(lineno));
    if (ds.env_id.empty()) ds.env_id = t.env_id;
    ds.trajectories.push_back(std::move(t));
  }
  require(ds.trajectories.size() == count, Errc::io,
          "load_dataset: header count " + std::to_string(count) + " but parsed " +
              std::to_string(ds.trajectories.size()) + " trajectories (truncated file?)");
  return ds;
}

}  // namespace crisp::demos
