#include "crisp/rl.hpp"

#include <cmath>

namespace crisp::rl {

using approx::FwdCache;
using approx::GaussSample;
using approx::Matrix;
using approx::ParamVector;

void ReplayBuffer::push(ReplayRecord rec) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(rec));
  } else {
    data_[cursor_] = std::move(rec);
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(Rng& rng, std::size_t n) const {
  require(!data_.empty(), Errc::invalid_argument, "replay sample from empty buffer");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i)
    idx[i] = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(data_.size()) - 1));
  return idx;
}

void ReplayBuffer::restore(std::vector<ReplayRecord> records, std::size_t cursor) {
  require(records.size() <= capacity_, Errc::invalid_argument, "replay restore overflow");
  data_ = std::move(records);
  cursor_ = cursor;
}

SacAgent::SacAgent(Level level, int state_dim, int goal_dim, int action_dim, const SacConfig& cfg,
                   Rng init_rng)
    : level_(level), state_dim_(state_dim), goal_dim_(goal_dim), action_dim_(action_dim),
      cfg_(cfg) {
  require(state_dim > 0 && goal_dim > 0 && action_dim > 0, Errc::config, "sac: bad dims");
  require(cfg_.gamma > 0 && cfg_.gamma < 1, Errc::config, "sac: gamma must be in (0,1)");
  require(cfg_.tau > 0 && cfg_.tau <= 1, Errc::config, "sac: tau must be in (0,1]");
  actor_spec_ = {state_dim + goal_dim, cfg_.hidden, 2 * action_dim, approx::Head::tanh_gaussian};
  critic_spec_ = {state_dim + goal_dim + action_dim, cfg_.hidden, 1, approx::Head::linear};

  actor_ = approx::init_params(actor_spec_, init_rng);
  // Start with moderate exploration noise: log_std biases at -1.
  {
    auto layout = actor_spec_.layout();
    std::size_t off = 0;
    for (std::size_t i = 0; i + 1 < layout.size(); ++i)
      off += static_cast<std::size_t>(layout[i].second.first) * layout[i].second.second;
    for (int d = 0; d < action_dim; ++d) actor_.v[off + action_dim + d] = -1.0;
  }
  critic1_ = approx::init_params(critic_spec_, init_rng);
  critic2_ = approx::init_params(critic_spec_, init_rng);
  target1_ = critic1_;
  target2_ = critic2_;
  actor_opt_ = approx::AdamState(actor_.size(), cfg_.lr);
  c1_opt_ = approx::AdamState(critic1_.size(), cfg_.lr);
  c2_opt_ = approx::AdamState(critic2_.size(), cfg_.lr);
}

void SacAgent::set_params(ParamVector actor, ParamVector c1, ParamVector c2, ParamVector t1,
                          ParamVector t2) {
  actor_ = std::move(actor);
  critic1_ = std::move(c1);
  critic2_ = std::move(c2);
  target1_ = std::move(t1);
  target2_ = std::move(t2);
}

ActionVec SacAgent::select_action(const StateVec& s, const GoalVec& g, bool stochastic,
                                  Rng& noise_rng) const {
  Vec noise(static_cast<std::size_t>(action_dim_), 0.0);
  if (stochastic)
    for (double& n : noise) n = noise_rng.normal();
  return select_action_with_noise(s, g, noise);
}

ActionVec SacAgent::select_action_with_noise(const StateVec& s, const GoalVec& g,
                                             const Vec& noise) const {
  require(static_cast<int>(s.size()) == state_dim_ && static_cast<int>(g.size()) == goal_dim_,
          Errc::dimension_mismatch, "select_action: dims");
  Matrix X(1, state_dim_ + goal_dim_);
  std::copy(s.begin(), s.end(), X.row(0));
  std::copy(g.begin(), g.end(), X.row(0) + state_dim_);
  Matrix Y;
  approx::mlp_forward(actor_spec_, actor_, X, Y, nullptr);
  GaussSample sample = approx::tanh_gaussian_sample(Y.row(0), action_dim_, noise.data());
  return sample.action;
}

Matrix SacAgent::assemble_sg(const std::vector<ReplayRecord>& batch, bool next) const {
  Matrix X(static_cast<int>(batch.size()), state_dim_ + goal_dim_);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const StateVec& s = next ? batch[r].next_state : batch[r].state;
    require(static_cast<int>(s.size()) == state_dim_ &&
                static_cast<int>(batch[r].goal.size()) == goal_dim_,
            Errc::dimension_mismatch, "sac batch: dims");
    require(batch[r].level == level_, Errc::invalid_argument,
            "sac batch: record from the other hierarchy level");
    double* row = X.row(static_cast<int>(r));
    std::copy(s.begin(), s.end(), row);
    std::copy(batch[r].goal.begin(), batch[r].goal.end(), row + state_dim_);
  }
  return X;
}

UpdateResult SacAgent::critic_update(const std::vector<ReplayRecord>& batch, Rng& update_rng) {
  require(!batch.empty(), Errc::invalid_argument, "critic_update: empty batch");
  const int B = static_cast<int>(batch.size());

  // Fresh next actions from the current actor.
  Matrix Xn = assemble_sg(batch, /*next=*/true);
  Matrix Yn;
  approx::mlp_forward(actor_spec_, actor_, Xn, Yn, nullptr);
  Vec noise(static_cast<std::size_t>(action_dim_));
  Matrix Qn_in(B, state_dim_ + goal_dim_ + action_dim_);
  Vec logp_next(static_cast<std::size_t>(B));
  for (int r = 0; r < B; ++r) {
    for (double& n : noise) n = update_rng.normal();
    GaussSample smp = approx::tanh_gaussian_sample(Yn.row(r), action_dim_, noise.data());
    logp_next[static_cast<std::size_t>(r)] = smp.logp;
    double* row = Qn_in.row(r);
    std::copy(Xn.row(r), Xn.row(r) + state_dim_ + goal_dim_, row);
    std::copy(smp.action.begin(), smp.action.end(), row + state_dim_ + goal_dim_);
  }
  Matrix q1n, q2n;
  approx::mlp_forward(critic_spec_, target1_, Qn_in, q1n, nullptr);
  approx::mlp_forward(critic_spec_, target2_, Qn_in, q2n, nullptr);

  Vec target(static_cast<std::size_t>(B));
  for (int r = 0; r < B; ++r) {
    const double qmin = std::min(q1n.at(r, 0), q2n.at(r, 0));
    const double soft = qmin - cfg_.alpha * logp_next[static_cast<std::size_t>(r)];
    target[static_cast<std::size_t>(r)] =
        batch[r].reward + cfg_.gamma * (batch[r].done ? 0.0 : 1.0) * soft;
  }

  // Regress both critics.
  Matrix Q_in(B, state_dim_ + goal_dim_ + action_dim_);
  Matrix Xc = assemble_sg(batch, /*next=*/false);
  for (int r = 0; r < B; ++r) {
    double* row = Q_in.row(r);
    std::copy(Xc.row(r), Xc.row(r) + state_dim_ + goal_dim_, row);
    require(static_cast<int>(batch[r].action.size()) == action_dim_, Errc::dimension_mismatch,
            "critic_update: action dim");
    std::copy(batch[r].action.begin(), batch[r].action.end(), row + state_dim_ + goal_dim_);
  }

  double loss = 0.0;
  for (ParamVector* params : {&critic1_, &critic2_}) {
    FwdCache cache;
    Matrix q;
    approx::mlp_forward(critic_spec_, *params, Q_in, q, &cache);
    Matrix dq(B, 1);
    double mse = 0.0;
    for (int r = 0; r < B; ++r) {
      const double err = q.at(r, 0) - target[static_cast<std::size_t>(r)];
      mse += err * err;
      dq.at(r, 0) = err / B;  // d(1/2 mean err^2)
    }
    loss += 0.5 * mse / B;
    ParamVector grad;
    grad.v.assign(params->v.size(), 0.0);
    approx::mlp_backward(critic_spec_, *params, cache, dq, &grad, nullptr);
    approx::AdamState& opt = (params == &critic1_) ? c1_opt_ : c2_opt_;
    if (!std::isfinite(loss) || !opt.step(*params, grad)) return {loss, false};
  }

  // Polyak smoothing.
  for (std::size_t i = 0; i < target1_.v.size(); ++i) {
    target1_.v[i] = cfg_.tau * critic1_.v[i] + (1.0 - cfg_.tau) * target1_.v[i];
    target2_.v[i] = cfg_.tau * critic2_.v[i] + (1.0 - cfg_.tau) * target2_.v[i];
  }
  return {loss, true};
}

UpdateResult SacAgent::actor_update(const std::vector<ReplayRecord>& batch, Rng& update_rng,
                                    const ParamVector* extra_grad) {
  require(!batch.empty(), Errc::invalid_argument, "actor_update: empty batch");
  const int B = static_cast<int>(batch.size());

  Matrix X = assemble_sg(batch, /*next=*/false);
  FwdCache actor_cache;
  Matrix Y;
  approx::mlp_forward(actor_spec_, actor_, X, Y, &actor_cache);

  Vec noise(static_cast<std::size_t>(action_dim_));
  std::vector<GaussSample> samples;
  samples.reserve(static_cast<std::size_t>(B));
  Matrix Q_in(B, state_dim_ + goal_dim_ + action_dim_);
  for (int r = 0; r < B; ++r) {
    for (double& n : noise) n = update_rng.normal();
    samples.push_back(approx::tanh_gaussian_sample(Y.row(r), action_dim_, noise.data()));
    double* row = Q_in.row(r);
    std::copy(X.row(r), X.row(r) + state_dim_ + goal_dim_, row);
    std::copy(samples.back().action.begin(), samples.back().action.end(),
              row + state_dim_ + goal_dim_);
  }

  FwdCache qc1, qc2;
  Matrix q1, q2;
  approx::mlp_forward(critic_spec_, critic1_, Q_in, q1, &qc1);
  approx::mlp_forward(critic_spec_, critic2_, Q_in, q2, &qc2);

  double loss = 0.0;
  Matrix dq1(B, 1), dq2(B, 1);
  for (int r = 0; r < B; ++r) {
    const bool first = q1.at(r, 0) <= q2.at(r, 0);
    const double qmin = first ? q1.at(r, 0) : q2.at(r, 0);
    loss += (cfg_.alpha * samples[static_cast<std::size_t>(r)].logp - qmin) / B;
    // d loss / d qmin = -1/B through the selected critic only.
    (first ? dq1 : dq2).at(r, 0) = -1.0 / B;
  }

  // dQ/da through each critic's input gradient (critic parameters frozen).
  Matrix dIn1, dIn2;
  approx::mlp_backward(critic_spec_, critic1_, qc1, dq1, nullptr, &dIn1);
  approx::mlp_backward(critic_spec_, critic2_, qc2, dq2, nullptr, &dIn2);

  Matrix dY(B, 2 * action_dim_);
  Vec d_action(static_cast<std::size_t>(action_dim_));
  for (int r = 0; r < B; ++r) {
    for (int d = 0; d < action_dim_; ++d)
      d_action[static_cast<std::size_t>(d)] =
          dIn1.at(r, state_dim_ + goal_dim_ + d) + dIn2.at(r, state_dim_ + goal_dim_ + d);
    approx::tanh_gaussian_backward(samples[static_cast<std::size_t>(r)], d_action.data(),
                                   cfg_.alpha / B, dY.row(r));
  }

  ParamVector grad;
  grad.v.assign(actor_.v.size(), 0.0);
  approx::mlp_backward(actor_spec_, actor_, actor_cache, dY, &grad, nullptr);
  if (extra_grad) {
    require(extra_grad->size() == grad.size(), Errc::dimension_mismatch,
            "actor_update: extra gradient layout mismatch");
    for (std::size_t i = 0; i < grad.v.size(); ++i) grad.v[i] += extra_grad->v[i];
  }
  if (!std::isfinite(loss) || !actor_opt_.step(actor_, grad)) return {loss, false};
  return {loss, true};
}

SacAgent::ActorEval SacAgent::actor_eval(const Matrix& inputs, Rng& noise_rng) const {
  ActorEval ev;
  Matrix Y;
  approx::mlp_forward(actor_spec_, actor_, inputs, Y, &ev.cache);
  Vec noise(static_cast<std::size_t>(action_dim_));
  ev.samples.reserve(static_cast<std::size_t>(inputs.rows));
  for (int r = 0; r < inputs.rows; ++r) {
    for (double& n : noise) n = noise_rng.normal();
    ev.samples.push_back(approx::tanh_gaussian_sample(Y.row(r), action_dim_, noise.data()));
  }
  return ev;
}

ParamVector SacAgent::actor_backward_from_samples(const ActorEval& eval, const Matrix& d_action,
                                                  const Vec* d_logp) const {
  const int B = d_action.rows;
  require(B == static_cast<int>(eval.samples.size()) && d_action.cols == action_dim_,
          Errc::dimension_mismatch, "actor_backward_from_samples: shape");
  Matrix dY(B, 2 * action_dim_);
  for (int r = 0; r < B; ++r)
    approx::tanh_gaussian_backward(eval.samples[static_cast<std::size_t>(r)], d_action.row(r),
                                   d_logp ? (*d_logp)[static_cast<std::size_t>(r)] : 0.0,
                                   dY.row(r));
  ParamVector grad;
  grad.v.assign(actor_.v.size(), 0.0);
  approx::mlp_backward(actor_spec_, actor_, eval.cache, dY, &grad, nullptr);
  return grad;
}

void SacAgent::actor_mean(const Matrix& inputs, Matrix& mean_tanh, FwdCache& cache) const {
  Matrix Y;
  approx::mlp_forward(actor_spec_, actor_, inputs, Y, &cache);
  mean_tanh = Matrix(inputs.rows, action_dim_);
  for (int r = 0; r < inputs.rows; ++r)
    for (int d = 0; d < action_dim_; ++d) mean_tanh.at(r, d) = std::tanh(Y.at(r, d));
}

ParamVector SacAgent::actor_backward_mean(const FwdCache& cache, const Matrix& d_mean_tanh,
                                          const Matrix& mean_tanh) const {
  const int B = d_mean_tanh.rows;
  Matrix dY(B, 2 * action_dim_);
  for (int r = 0; r < B; ++r)
    for (int d = 0; d < action_dim_; ++d) {
      const double a = mean_tanh.at(r, d);
      dY.at(r, d) = d_mean_tanh.at(r, d) * (1.0 - a * a);
    }
  ParamVector grad;
  grad.v.assign(actor_.v.size(), 0.0);
  approx::mlp_backward(actor_spec_, actor_, cache, dY, &grad, nullptr);
  return grad;
}

void SacAgent::critic_values(const Matrix& sga, Vec& q1, Vec& q2) const {
  Matrix y1, y2;
  approx::mlp_forward(critic_spec_, critic1_, sga, y1, nullptr);
  approx::mlp_forward(critic_spec_, critic2_, sga, y2, nullptr);
  q1 = y1.a;
  q2 = y2.a;
}

}  // namespace crisp::rl
