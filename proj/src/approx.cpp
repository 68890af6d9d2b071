#include "crisp/approx.hpp"

#include <cmath>

namespace crisp::approx {

namespace {

// Layer sizes including input: [in, h1, ..., out].
std::vector<int> widths(const MlpSpec& s) {
  std::vector<int> w;
  w.push_back(s.input_dim);
  for (int h : s.hidden) w.push_back(h);
  w.push_back(s.output_dim);
  return w;
}

// Y[B,out] += X[B,in] * W[out,in]^T + b
void affine(const Matrix& X, const double* W, const double* b, Matrix& Y) {
  const int B = X.rows, in = X.cols, out = Y.cols;
  for (int r = 0; r < B; ++r) {
    const double* x = X.row(r);
    double* y = Y.row(r);
    for (int o = 0; o < out; ++o) {
      const double* w = W + static_cast<std::size_t>(o) * in;
      double acc = b[o];
      for (int k = 0; k < in; ++k) acc += w[k] * x[k];
      y[o] = acc;
    }
  }
}

}  // namespace

int MlpSpec::param_count() const {
  int n = 0;
  auto w = widths(*this);
  for (std::size_t l = 0; l + 1 < w.size(); ++l) n += w[l + 1] * w[l] + w[l + 1];
  return n;
}

std::vector<std::pair<std::string, std::pair<int, int>>> MlpSpec::layout() const {
  std::vector<std::pair<std::string, std::pair<int, int>>> out;
  auto w = widths(*this);
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    out.push_back({"w" + std::to_string(l), {w[l + 1], w[l]}});
    out.push_back({"b" + std::to_string(l), {w[l + 1], 1}});
  }
  return out;
}

ParamVector init_params(const MlpSpec& spec, Rng& rng) {
  ParamVector p;
  p.v.resize(static_cast<std::size_t>(spec.param_count()));
  auto w = widths(spec);
  std::size_t off = 0;
  const std::size_t n_layers = w.size() - 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const int fan_in = w[l], fan_out = w[l + 1];
    const bool last = (l + 1 == n_layers);
    const double scale = last ? 3e-3 : std::sqrt(6.0 / fan_in);
    for (int i = 0; i < fan_out * fan_in; ++i) p.v[off++] = rng.uniform(-scale, scale);
    for (int i = 0; i < fan_out; ++i) p.v[off++] = 0.0;
  }
  return p;
}

void mlp_forward(const MlpSpec& spec, const ParamVector& params, const Matrix& X, Matrix& Y,
                 FwdCache* cache) {
  require(X.cols == spec.input_dim, Errc::dimension_mismatch,
          "mlp_forward: input dim " + std::to_string(X.cols) + " != " +
              std::to_string(spec.input_dim));
  require(params.size() == spec.param_count(), Errc::dimension_mismatch,
          "mlp_forward: parameter count mismatch");
  auto w = widths(spec);
  const int B = X.rows;
  if (cache) {
    cache->input = X;
    cache->pre.clear();
    cache->post.clear();
  }
  Matrix cur = X;
  std::size_t off = 0;
  const std::size_t n_layers = w.size() - 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const int in = w[l], out = w[l + 1];
    Matrix z(B, out);
    affine(cur, params.v.data() + off, params.v.data() + off + static_cast<std::size_t>(out) * in,
           z);
    off += static_cast<std::size_t>(out) * in + out;
    if (cache) cache->pre.push_back(z);
    if (l + 1 < n_layers) {
      for (double& x : z.a) x = x > 0.0 ? x : 0.0;  // ReLU
      if (cache) cache->post.push_back(z);
      cur = std::move(z);
    } else {
      if (spec.head == Head::sigmoid)
        for (double& x : z.a) x = 1.0 / (1.0 + std::exp(-x));
      cur = std::move(z);
    }
  }
  Y = std::move(cur);
}

void mlp_backward(const MlpSpec& spec, const ParamVector& params, const FwdCache& cache,
                  const Matrix& dY, ParamVector* grad, Matrix* dX) {
  auto w = widths(spec);
  const std::size_t n_layers = w.size() - 1;
  require(cache.pre.size() == n_layers, Errc::invalid_argument,
          "mlp_backward: cache does not match spec");
  const int B = dY.rows;
  require(dY.cols == spec.output_dim && B == cache.input.rows, Errc::dimension_mismatch,
          "mlp_backward: dY shape mismatch");
  if (grad)
    require(grad->size() == spec.param_count(), Errc::dimension_mismatch,
            "mlp_backward: grad size mismatch");

  // Offsets of each layer's weights in the flat vector.
  std::vector<std::size_t> offs(n_layers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    offs[l] = off;
    off += static_cast<std::size_t>(w[l + 1]) * w[l] + w[l + 1];
  }

  Matrix delta = dY;
  if (spec.head == Head::sigmoid) {
    const Matrix& z = cache.pre.back();
    for (std::size_t i = 0; i < delta.a.size(); ++i) {
      const double s = 1.0 / (1.0 + std::exp(-z.a[i]));
      delta.a[i] *= s * (1.0 - s);
    }
  }

  for (std::size_t li = n_layers; li-- > 0;) {
    const int in = w[li], out = w[li + 1];
    const double* W = params.v.data() + offs[li];
    const Matrix& x = (li == 0) ? cache.input : cache.post[li - 1];

    if (grad) {
      double* gW = grad->v.data() + offs[li];
      double* gb = gW + static_cast<std::size_t>(out) * in;
      for (int r = 0; r < B; ++r) {
        const double* d = delta.row(r);
        const double* xr = x.row(r);
        for (int o = 0; o < out; ++o) {
          const double dv = d[o];
          if (dv == 0.0) continue;
          double* gw = gW + static_cast<std::size_t>(o) * in;
          for (int k = 0; k < in; ++k) gw[k] += dv * xr[k];
          gb[o] += dv;
        }
      }
    }

    const bool need_dx = (li > 0) || (dX != nullptr);
    if (!need_dx) break;
    Matrix dx(B, in);
    for (int r = 0; r < B; ++r) {
      const double* d = delta.row(r);
      double* dxr = dx.row(r);
      for (int o = 0; o < out; ++o) {
        const double dv = d[o];
        if (dv == 0.0) continue;
        const double* wrow = W + static_cast<std::size_t>(o) * in;
        for (int k = 0; k < in; ++k) dxr[k] += dv * wrow[k];
      }
    }
    if (li > 0) {
      const Matrix& z = cache.pre[li - 1];
      for (std::size_t i = 0; i < dx.a.size(); ++i)
        if (z.a[i] <= 0.0) dx.a[i] = 0.0;  // ReLU mask
      delta = std::move(dx);
    } else if (dX) {
      *dX = std::move(dx);
    }
  }
}

bool AdamState::step(ParamVector& params, const ParamVector& grad) {
  require(params.size() == static_cast<int>(m.size()) && grad.size() == params.size(),
          Errc::dimension_mismatch, "adam: layout mismatch");
  for (double g : grad.v)
    if (!std::isfinite(g)) return false;
  ++t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.v.size(); ++i) {
    const double g = grad.v[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
    const double mh = m[i] / bc1;
    const double vh = v[i] / bc2;
    params.v[i] -= lr * mh / (std::sqrt(vh) + eps);
  }
  return true;
}

GaussSample tanh_gaussian_sample(const double* head_out, int action_dim, const double* noise) {
  GaussSample s;
  s.action.resize(action_dim);
  s.mean.assign(head_out, head_out + action_dim);
  s.log_std.assign(head_out + action_dim, head_out + 2 * action_dim);
  s.noise.assign(noise, noise + action_dim);
  double logp = 0.0;
  for (int i = 0; i < action_dim; ++i) {
    const double ls = clamp(s.log_std[i], kLogStdMin, kLogStdMax);
    const double sd = std::exp(ls);
    const double u = s.mean[i] + sd * noise[i];
    // tanh saturates to exactly +-1 in floating point; keep the open interval.
    const double a = clamp(std::tanh(u), -1.0 + 1e-12, 1.0 - 1e-12);
    s.action[i] = a;
    logp += -ls - 0.5 * std::log(2.0 * M_PI) - 0.5 * noise[i] * noise[i];
    logp -= std::log(1.0 - a * a + kTanhEps);
  }
  s.logp = logp;
  return s;
}

void tanh_gaussian_backward(const GaussSample& s, const double* d_action, double d_logp,
                            double* d_head_out) {
  const int d = static_cast<int>(s.action.size());
  for (int i = 0; i < d; ++i) {
    const double a = s.action[i];
    const double one_m_a2 = 1.0 - a * a;
    const bool clamped = s.log_std[i] < kLogStdMin || s.log_std[i] > kLogStdMax;
    const double ls = clamp(s.log_std[i], kLogStdMin, kLogStdMax);
    const double sd = std::exp(ls);
    // d logp / d u: only the tanh correction depends on u (the Gaussian term
    // is constant in u under reparameterization).
    const double dlogp_du = 2.0 * a * one_m_a2 / (one_m_a2 + kTanhEps);
    const double da = d_action ? d_action[i] : 0.0;
    const double du = da * one_m_a2 + d_logp * dlogp_du;
    d_head_out[i] = du;  // du/dmean = 1
    // u = mean + exp(ls) * eps, and logp carries an explicit -ls term.
    d_head_out[d + i] = clamped ? 0.0 : du * sd * s.noise[i] - d_logp;
  }
}

double tanh_gaussian_log_density(const Vec& action, const Vec& mean, const Vec& log_std) {
  require(action.size() == mean.size() && mean.size() == log_std.size(), Errc::dimension_mismatch,
          "tanh_gaussian_log_density: dim mismatch");
  double logp = 0.0;
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double a = clamp(action[i], -1.0 + 1e-12, 1.0 - 1e-12);
    const double u = std::atanh(a);
    const double ls = clamp(log_std[i], kLogStdMin, kLogStdMax);
    const double sd = std::exp(ls);
    const double z = (u - mean[i]) / sd;
    logp += -ls - 0.5 * std::log(2.0 * M_PI) - 0.5 * z * z;
    logp -= std::log(1.0 - a * a + kTanhEps);
  }
  return logp;
}

}  // namespace crisp::approx
