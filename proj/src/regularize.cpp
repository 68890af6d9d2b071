#include "crisp/regularize.hpp"

namespace crisp::regularize {

using approx::FwdCache;
using approx::Matrix;
using approx::ParamVector;

RegKind reg_from_string(const std::string& s) {
  if (s == "none") return RegKind::none;
  if (s == "irl") return RegKind::irl;
  if (s == "bc") return RegKind::bc;
  throw Error(Errc::config, "unknown regularizer: " + s);
}

std::string reg_to_string(RegKind k) {
  switch (k) {
    case RegKind::none: return "none";
    case RegKind::irl: return "irl";
    case RegKind::bc: return "bc";
  }
  return "?";
}

Discriminator::Discriminator(rl::Level level, int input_dim, const std::vector<int>& hidden,
                             double lr, Rng init_rng)
    : level_(level), input_dim_(input_dim) {
  require(input_dim > 0, Errc::config, "discriminator: bad input dim");
  spec_ = {input_dim, hidden, 1, approx::Head::sigmoid};
  params_ = approx::init_params(spec_, init_rng);
  opt_ = approx::AdamState(params_.size(), lr);
}

double Discriminator::update(const Matrix& expert_rows, const Matrix& policy_rows) {
  require(expert_rows.rows > 0 && policy_rows.rows > 0, Errc::invalid_argument,
          "disc update: empty batch");
  require(expert_rows.cols == input_dim_ && policy_rows.cols == input_dim_,
          Errc::dimension_mismatch, "disc update: input dim");
  ++update_passes_;

  ParamVector grad;
  grad.v.assign(params_.v.size(), 0.0);
  double loss = 0.0;

  // Expert side: targets 1.
  {
    FwdCache cache;
    Matrix d;
    approx::mlp_forward(spec_, params_, expert_rows, d, &cache);
    Matrix dd(expert_rows.rows, 1);
    for (int r = 0; r < expert_rows.rows; ++r) {
      const double e = d.at(r, 0) - 1.0;
      loss += 0.5 * e * e / expert_rows.rows;
      dd.at(r, 0) = e / expert_rows.rows;
    }
    approx::mlp_backward(spec_, params_, cache, dd, &grad, nullptr);
  }
  // Policy side: targets 0.
  {
    FwdCache cache;
    Matrix d;
    approx::mlp_forward(spec_, params_, policy_rows, d, &cache);
    Matrix dd(policy_rows.rows, 1);
    for (int r = 0; r < policy_rows.rows; ++r) {
      const double e = d.at(r, 0);
      loss += 0.5 * e * e / policy_rows.rows;
      dd.at(r, 0) = e / policy_rows.rows;
    }
    approx::mlp_backward(spec_, params_, cache, dd, &grad, nullptr);
  }
  if (!std::isfinite(loss) || !opt_.step(params_, grad)) return loss;
  return loss;
}

double Discriminator::generator_loss(const Matrix& rows, Matrix* d_rows) const {
  require(rows.cols == input_dim_, Errc::dimension_mismatch, "generator_loss: input dim");
  ++value_passes;
  FwdCache cache;
  Matrix d;
  approx::mlp_forward(spec_, params_, rows, d, &cache);
  double loss = 0.0;
  Matrix dd(rows.rows, 1);
  for (int r = 0; r < rows.rows; ++r) {
    const double e = d.at(r, 0) - 1.0;
    loss += 0.5 * e * e / rows.rows;
    dd.at(r, 0) = e / rows.rows;
  }
  if (d_rows) approx::mlp_backward(spec_, params_, cache, dd, nullptr, d_rows);
  return loss;
}

void Discriminator::values(const Matrix& rows, Vec& out) const {
  ++value_passes;
  Matrix d;
  approx::mlp_forward(spec_, params_, rows, d, nullptr);
  out = d.a;
}

double bc_loss(const Matrix& policy_out, const Matrix& targets, Matrix* d_out) {
  require(policy_out.rows == targets.rows && policy_out.cols == targets.cols,
          Errc::dimension_mismatch, "bc_loss: shape mismatch");
  const int n = policy_out.rows * policy_out.cols;
  require(n > 0, Errc::invalid_argument, "bc_loss: empty batch");
  double loss = 0.0;
  if (d_out) *d_out = Matrix(policy_out.rows, policy_out.cols);
  for (int i = 0; i < n; ++i) {
    const double e = policy_out.a[i] - targets.a[i];
    loss += e * e / n;
    if (d_out) d_out->a[i] = 2.0 * e / n;
  }
  return loss;
}

}  // namespace crisp::regularize
