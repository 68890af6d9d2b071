#include "crisp/crisp.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "crisp/core.hpp"
#include "crisp/demos.hpp"
#include "crisp/envs.hpp"
#include "crisp/harness.hpp"

namespace {

thread_local std::string g_last_error;

crisp_status from_errc(crisp::Errc code) {
  using crisp::Errc;
  switch (code) {
    case Errc::invalid_argument: return CRISP_ERR_INVALID_ARG;
    case Errc::dimension_mismatch: return CRISP_ERR_DIMENSION;
    case Errc::bad_state: return CRISP_ERR_BAD_STATE;
    case Errc::io: return CRISP_ERR_IO;
    case Errc::planning_failure: return CRISP_ERR_PLANNING;
    case Errc::generation_failure: return CRISP_ERR_GENERATION;
    case Errc::config: return CRISP_ERR_CONFIG;
    case Errc::empty_dataset: return CRISP_ERR_EMPTY_DATASET;
    case Errc::internal: return CRISP_ERR_INTERNAL;
  }
  return CRISP_ERR_INTERNAL;
}

template <typename Fn>
crisp_status guarded(Fn&& fn) {
  try {
    fn();
    return CRISP_OK;
  } catch (const crisp::Error& e) {
    g_last_error = e.what();
    return from_errc(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CRISP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return CRISP_ERR_INTERNAL;
  }
}

crisp_status invalid(const char* msg) {
  g_last_error = msg;
  return CRISP_ERR_INVALID_ARG;
}

}  // namespace

struct crisp_env {
  std::unique_ptr<crisp::Env> env;
};

extern "C" {

const char* crisp_status_name(crisp_status s) {
  switch (s) {
    case CRISP_OK: return "ok";
    case CRISP_ERR_INVALID_ARG: return "invalid_argument";
    case CRISP_ERR_DIMENSION: return "dimension_mismatch";
    case CRISP_ERR_BAD_STATE: return "bad_state";
    case CRISP_ERR_IO: return "io";
    case CRISP_ERR_PLANNING: return "planning_failure";
    case CRISP_ERR_GENERATION: return "generation_failure";
    case CRISP_ERR_CONFIG: return "config";
    case CRISP_ERR_EMPTY_DATASET: return "empty_dataset";
    case CRISP_ERR_INTERNAL: return "internal";
  }
  return "?";
}

const char* crisp_last_error(void) { return g_last_error.c_str(); }

const char* crisp_version(void) { return "1.0.0"; }

crisp_status crisp_env_create(const char* name, const char* params_json, crisp_env** out) {
  if (!name || !out) return invalid("crisp_env_create: null argument");
  return guarded([&] {
    auto handle = std::make_unique<crisp_env>();
    handle->env = crisp::envs::make_env(name, params_json ? params_json : "");
    *out = handle.release();
  });
}

void crisp_env_destroy(crisp_env* env) { delete env; }

crisp_status crisp_env_dims(const crisp_env* env, int32_t* state_dim, int32_t* goal_dim,
                            int32_t* action_dim, int32_t* horizon) {
  if (!env) return invalid("crisp_env_dims: null env");
  const crisp::EnvContract& c = env->env->contract();
  if (state_dim) *state_dim = c.state_dim;
  if (goal_dim) *goal_dim = c.goal_dim;
  if (action_dim) *action_dim = c.action_dim;
  if (horizon) *horizon = c.horizon;
  return CRISP_OK;
}

crisp_status crisp_env_reset(crisp_env* env, uint64_t seed, double* state_out) {
  if (!env) return invalid("crisp_env_reset: null env");
  return guarded([&] {
    const crisp::StateVec s = env->env->reset(seed);
    if (state_out) std::memcpy(state_out, s.data(), s.size() * sizeof(double));
  });
}

crisp_status crisp_env_reset_to(crisp_env* env, const double* state, int32_t state_len) {
  if (!env || !state) return invalid("crisp_env_reset_to: null argument");
  return guarded([&] { env->env->reset_to(crisp::StateVec(state, state + state_len)); });
}

crisp_status crisp_env_step(crisp_env* env, const double* action, int32_t action_len,
                            double* next_state_out, int32_t* done_out,
                            double* dist_to_goal_out) {
  if (!env || !action) return invalid("crisp_env_step: null argument");
  return guarded([&] {
    const crisp::EnvStep out = env->env->step(crisp::ActionVec(action, action + action_len));
    if (next_state_out)
      std::memcpy(next_state_out, out.next_state.data(), out.next_state.size() * sizeof(double));
    if (done_out) *done_out = out.done ? 1 : 0;
    if (dist_to_goal_out) *dist_to_goal_out = out.info.dist_to_goal;
  });
}

crisp_status crisp_env_state(const crisp_env* env, double* state_out) {
  if (!env || !state_out) return invalid("crisp_env_state: null argument");
  const crisp::StateVec& s = env->env->state();
  std::memcpy(state_out, s.data(), s.size() * sizeof(double));
  return CRISP_OK;
}

crisp_status crisp_env_goal(const crisp_env* env, double* goal_out) {
  if (!env || !goal_out) return invalid("crisp_env_goal: null argument");
  const crisp::GoalVec& g = env->env->goal();
  std::memcpy(goal_out, g.data(), g.size() * sizeof(double));
  return CRISP_OK;
}

crisp_status crisp_env_achieved_goal(const crisp_env* env, const double* state,
                                     int32_t state_len, double* goal_out) {
  if (!env || !state || !goal_out) return invalid("crisp_env_achieved_goal: null argument");
  return guarded([&] {
    const crisp::GoalVec g =
        env->env->achieved_goal(crisp::StateVec(state, state + state_len));
    std::memcpy(goal_out, g.data(), g.size() * sizeof(double));
  });
}

crisp_status crisp_maze_generate(uint64_t seed, int32_t width, int32_t height, char* json_out,
                                 int32_t json_cap) {
  if (!json_out || json_cap <= 0) return invalid("crisp_maze_generate: null buffer");
  return guarded([&] {
    const std::string j = crisp::envs::generate_maze(seed, width, height).to_json();
    crisp::require(static_cast<int32_t>(j.size()) + 1 <= json_cap, crisp::Errc::invalid_argument,
                   "crisp_maze_generate: buffer too small (need " +
                       std::to_string(j.size() + 1) + ")");
    std::memcpy(json_out, j.c_str(), j.size() + 1);
  });
}

crisp_status crisp_gen_demos(const char* env_name, const char* params_json, int32_t count,
                             uint64_t seed, const char* out_path) {
  if (!env_name || !out_path) return invalid("crisp_gen_demos: null argument");
  return guarded([&] {
    const crisp::demos::DemoDataset ds =
        crisp::demos::generate_demos(env_name, params_json ? params_json : "", count, seed);
    crisp::demos::save_dataset(ds, out_path);
  });
}

crisp_status crisp_train(const char* config_path, const uint64_t* seed_override,
                         const char* out_dir_override, crisp_progress_cb progress, void* user,
                         double* final_success_out) {
  if (!config_path) return invalid("crisp_train: null config path");
  return guarded([&] {
    crisp::harness::RunConfig cfg = crisp::harness::RunConfig::from_file(config_path);
    if (seed_override) cfg.seed = *seed_override;
    if (out_dir_override) cfg.out_dir = out_dir_override;
    const crisp::harness::TrainResult res = crisp::harness::train(cfg);
    if (progress) {
      for (const crisp::harness::MetricsRow& r : res.rows) {
        std::ostringstream os;
        os << "step " << r.step << " success " << r.success << " dg " << r.dg_size;
        progress(os.str().c_str(), user);
      }
    }
    if (final_success_out) *final_success_out = res.final_success;
  });
}

crisp_status crisp_evaluate(const char* checkpoint_path, const char* suite_path,
                            int32_t rollouts, double* success_out) {
  if (!checkpoint_path || !success_out) return invalid("crisp_evaluate: null argument");
  return guarded([&] {
    *success_out = crisp::harness::evaluate_checkpoint(
        checkpoint_path, suite_path ? suite_path : "", rollouts);
  });
}

crisp_status crisp_relabel(const char* demos_path, const char* checkpoint_path,
                           const char* parser, int32_t window_k, const char* out_path) {
  if (!demos_path || !checkpoint_path || !parser || !out_path)
    return invalid("crisp_relabel: null argument");
  return guarded([&] {
    crisp::harness::relabel_with_checkpoint(demos_path, checkpoint_path,
                                            crisp::relabel::parser_from_string(parser), window_k,
                                            out_path);
  });
}

crisp_status crisp_sweep(const char* config_path, const char* grid_path, const char* out_dir,
                         int32_t parallelism) {
  if (!config_path || !grid_path || !out_dir) return invalid("crisp_sweep: null argument");
  return guarded([&] {
    crisp::harness::RunConfig base = crisp::harness::RunConfig::from_file(config_path);
    std::ifstream f(grid_path);
    crisp::require(f.good(), crisp::Errc::io, std::string("sweep: cannot open ") + grid_path);
    std::stringstream ss;
    ss << f.rdbuf();
    crisp::harness::sweep(base, ss.str(), out_dir, parallelism);
  });
}

crisp_status crisp_plot(const char* archive_dir, const char* out_dir) {
  if (!archive_dir || !out_dir) return invalid("crisp_plot: null argument");
  return guarded([&] {
    bool any = false;
    try {
      crisp::harness::plot_success_curves(archive_dir, out_dir);
      any = true;
    } catch (const crisp::Error& e) {
      if (e.code() != crisp::Errc::empty_dataset) throw;
    }
    namespace fs = std::filesystem;
    for (const auto& entry : fs::recursive_directory_iterator(archive_dir)) {
      if (entry.is_regular_file() &&
          entry.path().filename().string().rfind("dg_epoch_", 0) == 0) {
        crisp::harness::plot_curriculum(entry.path().parent_path().string(), out_dir);
        any = true;
        break;
      }
    }
    crisp::require(any, crisp::Errc::empty_dataset,
                   std::string("plot: nothing to plot under ") + archive_dir);
  });
}

}  // extern "C"
