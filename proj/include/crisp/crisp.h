/* C interface to the crisp library: curriculum-regularized hierarchical RL
 * with primitive-informed demonstration parsing.
 *
 * All functions return a crisp_status; on failure crisp_last_error() holds a
 * human-readable message for the calling thread. Objects are opaque handles
 * owned by the library and released with their _destroy function.
 */
#ifndef CRISP_H
#define CRISP_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define CRISP_API __declspec(dllexport)
#else
#define CRISP_API __attribute__((visibility("default")))
#endif

typedef enum crisp_status {
  CRISP_OK = 0,
  CRISP_ERR_INVALID_ARG = 1,
  CRISP_ERR_DIMENSION = 2,
  CRISP_ERR_BAD_STATE = 3,
  CRISP_ERR_IO = 4,
  CRISP_ERR_PLANNING = 5,
  CRISP_ERR_GENERATION = 6,
  CRISP_ERR_CONFIG = 7,
  CRISP_ERR_EMPTY_DATASET = 8,
  CRISP_ERR_INTERNAL = 9
} crisp_status;

CRISP_API const char* crisp_status_name(crisp_status s);
CRISP_API const char* crisp_last_error(void);
CRISP_API const char* crisp_version(void);

/* ----- environments ----- */

typedef struct crisp_env crisp_env;

/* name: maze | point | blockpush | rope | line. params_json may be NULL. */
CRISP_API crisp_status crisp_env_create(const char* name, const char* params_json,
                                        crisp_env** out);
CRISP_API void crisp_env_destroy(crisp_env* env);

CRISP_API crisp_status crisp_env_dims(const crisp_env* env, int32_t* state_dim,
                                      int32_t* goal_dim, int32_t* action_dim, int32_t* horizon);

/* state_out must hold state_dim doubles (may be NULL). */
CRISP_API crisp_status crisp_env_reset(crisp_env* env, uint64_t seed, double* state_out);
CRISP_API crisp_status crisp_env_reset_to(crisp_env* env, const double* state,
                                          int32_t state_len);
/* next_state_out: state_dim doubles; done_out / dist_out may be NULL. */
CRISP_API crisp_status crisp_env_step(crisp_env* env, const double* action, int32_t action_len,
                                      double* next_state_out, int32_t* done_out,
                                      double* dist_to_goal_out);
CRISP_API crisp_status crisp_env_state(const crisp_env* env, double* state_out);
CRISP_API crisp_status crisp_env_goal(const crisp_env* env, double* goal_out);
CRISP_API crisp_status crisp_env_achieved_goal(const crisp_env* env, const double* state,
                                               int32_t state_len, double* goal_out);

/* Four-room maze layout as JSON ({'W','H','wall_col','wall_row','gates','cell'}). */
CRISP_API crisp_status crisp_maze_generate(uint64_t seed, int32_t width, int32_t height,
                                           char* json_out, int32_t json_cap);

/* ----- file-level operations (the CLI maps onto these) ----- */

typedef void (*crisp_progress_cb)(const char* line, void* user);

CRISP_API crisp_status crisp_gen_demos(const char* env_name, const char* params_json,
                                       int32_t count, uint64_t seed, const char* out_path);

/* config file: flat key = value text (see README). seed/out override the
 * config when non-NULL. final_success_out may be NULL. */
CRISP_API crisp_status crisp_train(const char* config_path, const uint64_t* seed_override,
                                   const char* out_dir_override, crisp_progress_cb progress,
                                   void* user, double* final_success_out);

CRISP_API crisp_status crisp_evaluate(const char* checkpoint_path, const char* suite_path,
                                      int32_t rollouts, double* success_out);

/* parser: "pip" or "window". */
CRISP_API crisp_status crisp_relabel(const char* demos_path, const char* checkpoint_path,
                                     const char* parser, int32_t window_k,
                                     const char* out_path);

CRISP_API crisp_status crisp_sweep(const char* config_path, const char* grid_path,
                                   const char* out_dir, int32_t parallelism);

CRISP_API crisp_status crisp_plot(const char* archive_dir, const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CRISP_H */
