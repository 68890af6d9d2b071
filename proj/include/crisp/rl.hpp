#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "crisp/approx.hpp"
#include "crisp/core.hpp"
#include "crisp/rng.hpp"

namespace crisp::rl {

enum class Level : std::uint8_t { lower = 0, higher = 1 };

struct ReplayRecord {
  StateVec state;
  GoalVec goal;
  ActionVec action;
  double reward = 0.0;  // in {0, -1}
  StateVec next_state;
  bool done = false;
  Level level = Level::lower;
};

// Uniform-sampling ring buffer.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  void push(ReplayRecord rec);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const ReplayRecord& at(std::size_t i) const { return data_[i]; }

  // Uniform with replacement; deterministic in the rng stream.
  std::vector<std::size_t> sample_indices(Rng& rng, std::size_t n) const;

  const std::vector<ReplayRecord>& records() const { return data_; }
  std::size_t cursor() const { return cursor_; }
  void restore(std::vector<ReplayRecord> records, std::size_t cursor);

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<ReplayRecord> data_;
};

struct SacConfig {
  double gamma = 0.98;
  double tau = 0.005;
  double alpha = 0.1;  // fixed entropy coefficient
  double lr = 3e-4;
  int batch = 256;
  std::vector<int> hidden = {64, 64};
};

struct UpdateResult {
  double loss = 0.0;
  bool applied = true;  // false when a non-finite loss/gradient was skipped
};

// Goal-conditioned soft actor-critic over flat parameter vectors: one tanh-
// Gaussian actor, two critics, two polyak-averaged target critics.
class SacAgent {
 public:
  SacAgent(Level level, int state_dim, int goal_dim, int action_dim, const SacConfig& cfg,
           Rng init_rng);

  Level level() const { return level_; }
  int state_dim() const { return state_dim_; }
  int goal_dim() const { return goal_dim_; }
  int action_dim() const { return action_dim_; }
  const SacConfig& config() const { return cfg_; }

  // stochastic=false returns tanh(mean). Noise is drawn from `noise_rng`
  // (exactly action_dim normal draws when stochastic).
  ActionVec select_action(const StateVec& s, const GoalVec& g, bool stochastic,
                          Rng& noise_rng) const;
  // Same, with externally supplied noise (tests inject zeros).
  ActionVec select_action_with_noise(const StateVec& s, const GoalVec& g,
                                     const Vec& noise) const;

  // One regression step of both critics toward
  //   r + gamma * (1 - done) * (min target-Q(s', a') - alpha * log pi(a')),
  // followed by a polyak update of the target networks.
  UpdateResult critic_update(const std::vector<ReplayRecord>& batch, Rng& update_rng);

  // One ascent step on E[min Q(s, a~) - alpha * log pi(a~)] via reparameterized
  // samples; returns the negated objective. `extra_grad` (same layout as the
  // actor) is added to the SAC gradient before the Adam step, which is how
  // regularizers join the joint objective.
  UpdateResult actor_update(const std::vector<ReplayRecord>& batch, Rng& update_rng,
                            const approx::ParamVector* extra_grad = nullptr);

  // Batched actor evaluation used by regularizers: forward on rows [s|g],
  // reparameterized samples with noise from rng; returns per-row samples and
  // keeps the cache so the caller can push gradients back with
  // actor_backward_from_samples.
  struct ActorEval {
    approx::FwdCache cache;
    std::vector<approx::GaussSample> samples;
  };
  ActorEval actor_eval(const approx::Matrix& inputs, Rng& noise_rng) const;
  // dL/d(action) rows (+ optional dL/dlogp per row) -> actor parameter grad.
  approx::ParamVector actor_backward_from_samples(const ActorEval& eval,
                                                  const approx::Matrix& d_action,
                                                  const Vec* d_logp = nullptr) const;
  // Deterministic head (tanh(mean)) with cache for BC-style losses.
  void actor_mean(const approx::Matrix& inputs, approx::Matrix& mean_tanh,
                  approx::FwdCache& cache) const;
  approx::ParamVector actor_backward_mean(const approx::FwdCache& cache,
                                          const approx::Matrix& d_mean_tanh,
                                          const approx::Matrix& mean_tanh) const;

  // Q values of (s, g, a) rows under critic 1/2 (diagnostics, tests).
  void critic_values(const approx::Matrix& sga, Vec& q1, Vec& q2) const;

  const approx::MlpSpec& actor_spec() const { return actor_spec_; }
  const approx::MlpSpec& critic_spec() const { return critic_spec_; }
  approx::ParamVector& actor_params() { return actor_; }
  const approx::ParamVector& actor_params() const { return actor_; }
  approx::ParamVector& critic1_params() { return critic1_; }
  approx::ParamVector& critic2_params() { return critic2_; }
  const approx::ParamVector& target1_params() const { return target1_; }
  const approx::ParamVector& target2_params() const { return target2_; }
  approx::AdamState& actor_opt() { return actor_opt_; }
  approx::AdamState& critic1_opt() { return c1_opt_; }
  approx::AdamState& critic2_opt() { return c2_opt_; }
  void set_params(approx::ParamVector actor, approx::ParamVector c1, approx::ParamVector c2,
                  approx::ParamVector t1, approx::ParamVector t2);

 private:
  approx::Matrix assemble_sg(const std::vector<ReplayRecord>& batch, bool next) const;

  Level level_;
  int state_dim_, goal_dim_, action_dim_;
  SacConfig cfg_;
  approx::MlpSpec actor_spec_, critic_spec_;
  approx::ParamVector actor_, critic1_, critic2_, target1_, target2_;
  approx::AdamState actor_opt_, c1_opt_, c2_opt_;
};

// Value-iteration-style tabular oracle used by tests lives in tests/support.

}  // namespace crisp::rl
