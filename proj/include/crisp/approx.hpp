#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crisp/core.hpp"
#include "crisp/rng.hpp"

namespace crisp::approx {

// Row-major dense matrix, the unit of batched network evaluation.
struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double* row(int r) { return a.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return a.data() + static_cast<std::size_t>(r) * cols; }
  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
  void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

enum class Head { linear, tanh_gaussian, sigmoid };

// Fully connected ReLU network description. For tanh_gaussian heads the raw
// network output is [mean, log_std] (output_dim = 2 * action_dim); squashing
// and the change-of-variables correction live in the sampling utilities.
struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden;
  int output_dim = 0;
  Head head = Head::linear;

  int param_count() const;
  // (name, {rows, cols}) per tensor; biases have cols == 1.
  std::vector<std::pair<std::string, std::pair<int, int>>> layout() const;
  bool operator==(const MlpSpec&) const = default;
};

struct ParamVector {
  std::vector<double> v;
  int size() const { return static_cast<int>(v.size()); }
};

// He-uniform hidden layers, small-uniform final layer, zero biases.
ParamVector init_params(const MlpSpec& spec, Rng& rng);

struct FwdCache {
  Matrix input;
  std::vector<Matrix> pre;   // pre-activation per layer (last = head input pre-nonlinearity)
  std::vector<Matrix> post;  // post-activation per hidden layer
};

// Y = net(X). `cache` may be null when no backward pass will follow.
void mlp_forward(const MlpSpec& spec, const ParamVector& params, const Matrix& X, Matrix& Y,
                 FwdCache* cache);

// Reverse-mode pass for the batch in `cache`. Accumulates into `grad` when
// non-null (caller zeroes it); writes input gradients into dX when non-null.
void mlp_backward(const MlpSpec& spec, const ParamVector& params, const FwdCache& cache,
                  const Matrix& dY, ParamVector* grad, Matrix* dX);

// --- Adam ---

struct AdamState {
  std::vector<double> m, v;
  std::int64_t t = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(int n = 0, double lr_ = 3e-4) : m(n, 0.0), v(n, 0.0), lr(lr_) {}

  // Standard bias-corrected update. Returns false (params untouched) when the
  // gradient is non-finite.
  bool step(ParamVector& params, const ParamVector& grad);
};

// --- tanh-squashed Gaussian head ---

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kTanhEps = 1e-6;

struct GaussSample {
  Vec action;   // in (-1, 1)^d
  double logp = 0.0;
  Vec mean, log_std, noise;  // retained for the backward pass
};

// head_out = [mean, log_std] (2d values), noise = d standard-normal draws.
// Reparameterized: action = tanh(mean + exp(log_std) * noise).
GaussSample tanh_gaussian_sample(const double* head_out, int action_dim, const double* noise);

// Gradient of (d_action . action + d_logp * logp) w.r.t. head_out.
void tanh_gaussian_backward(const GaussSample& s, const double* d_action, double d_logp,
                            double* d_head_out);

// Density of a given action under the squashed Gaussian (independent route,
// via atanh); used by tests and diagnostics.
double tanh_gaussian_log_density(const Vec& action, const Vec& mean, const Vec& log_std);

inline Vec tanh_deterministic(const double* head_out, int action_dim) {
  Vec a(action_dim);
  for (int i = 0; i < action_dim; ++i)
    a[i] = std::min(1.0 - 1e-12, std::max(-1.0 + 1e-12, std::tanh(head_out[i])));
  return a;
}

}  // namespace crisp::approx
