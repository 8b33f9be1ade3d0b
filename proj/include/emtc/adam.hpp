#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "emtc/common.hpp"

namespace emtc {

/// Adam with bias correction; one state per parameter tensor.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline void adam_step(std::vector<double>& params, const std::vector<double>& grads,
                      AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: size mismatch");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.t = 0;
  }
  state.t++;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    double mhat = state.m[i] / bc1;
    double vhat = state.v[i] / bc2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

/// Optimizer over a list of parameter tensors (matched by position).
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(const std::vector<std::vector<double>*>& params,
            const std::vector<const std::vector<double>*>& grads) {
    if (params.size() != grads.size()) throw ShapeError("AdamOptimizer: tensor count mismatch");
    if (states_.size() != params.size()) states_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
      adam_step(*params[i], *grads[i], states_[i], cfg_);
  }

  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<AdamState> states_;
};

}  // namespace emtc
