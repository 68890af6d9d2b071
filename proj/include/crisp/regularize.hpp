#pragma once

#include <cstdint>
#include <string>

#include "crisp/approx.hpp"
#include "crisp/core.hpp"
#include "crisp/rl.hpp"

namespace crisp::regularize {

enum class RegKind { none, irl, bc };
RegKind reg_from_string(const std::string& s);
std::string reg_to_string(RegKind k);

struct RegularizerConfig {
  RegKind kind = RegKind::none;
  double psi = 0.0;
  bool conditioned_hi = true;    // higher disc sees [s, g, subgoal] vs [subgoal]
  bool lower_level = true;       // regularize the lower primitive too
  bool lower_pairs_verified_only = true;
  double disc_lr = 3e-4;
  int batch = 256;
};

// Sigmoid-headed LSGAN discriminator over fixed-size feature rows.
class Discriminator {
 public:
  Discriminator(rl::Level level, int input_dim, const std::vector<int>& hidden, double lr,
                Rng init_rng);

  rl::Level level() const { return level_; }
  int input_dim() const { return input_dim_; }

  // One minimization step of 1/2 E[(D(expert)-1)^2] + 1/2 E[D(policy)^2].
  // Policy rows are plain data here (no gradient flows back to the policy).
  double update(const approx::Matrix& expert_rows, const approx::Matrix& policy_rows);

  // Generator-side LSGAN loss 1/2 E[(D(rows)-1)^2] and its gradient w.r.t.
  // the rows; a fresh forward pass, never reusing the update() pass.
  double generator_loss(const approx::Matrix& rows, approx::Matrix* d_rows) const;

  void values(const approx::Matrix& rows, Vec& out) const;

  const approx::MlpSpec& spec() const { return spec_; }
  approx::ParamVector& params() { return params_; }
  const approx::ParamVector& params() const { return params_; }
  approx::AdamState& opt() { return opt_; }

  // Pass counters back the stale-gradient guard: discriminator and policy
  // gradients must never come from the same forward pass.
  long update_passes() const { return update_passes_; }
  mutable long value_passes = 0;

 private:
  rl::Level level_;
  int input_dim_;
  approx::MlpSpec spec_;
  approx::ParamVector params_;
  approx::AdamState opt_;
  long update_passes_ = 0;
};

// Behavior-cloning alternative: mean squared error between the policy's
// deterministic output and the expert target, plus its gradient w.r.t. the
// output. Targets and outputs share the policy's raw (-1,1) action space.
double bc_loss(const approx::Matrix& policy_out, const approx::Matrix& targets,
               approx::Matrix* d_out);

}  // namespace crisp::regularize
