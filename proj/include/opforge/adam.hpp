#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace opforge {

/// Adam moments and hyperparameters for one flat parameter vector.
/// Defaults: lr 1e-3, beta1 0.9, beta2 0.999, eps 1e-8.
struct AdamState {
  std::size_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One Adam update with bias correction, in place. Moments are allocated
/// (zero) on the first call and must match the parameter count after that.
inline void adam_step(std::span<double> params, std::span<const double> grads,
                      AdamState& state) {
  const std::size_t n = params.size();
  if (grads.size() != n) throw std::invalid_argument("adam_step: shape mismatch");
  if (state.m.empty()) state.m.assign(n, 0.0);
  if (state.v.empty()) state.v.assign(n, 0.0);
  if (state.m.size() != n || state.v.size() != n)
    throw std::invalid_argument("adam_step: moment shape mismatch");
  for (double g : grads)
    if (!std::isfinite(g)) throw std::runtime_error("adam_step: non-finite gradient");

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

}  // namespace opforge
