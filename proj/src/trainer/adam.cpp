#include <cmath>

#include "beamgat/errors.hpp"
#include "beamgat/trainer.hpp"

namespace beamgat::train {

void adam_step(model::ParamSet& params, std::span<const ad::Tensor> grads, AdamState& state,
               const AdamConfig& config) {
  auto& entries = params.entries();
  if (grads.size() != entries.size()) throw ShapeError("adam_step: one gradient per parameter entry");
  if (state.m.empty()) {
    for (const auto& e : entries) {
      state.m.emplace_back(e.value.shape(), 0.0);
      state.v.emplace_back(e.value.shape(), 0.0);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t p = 0; p < entries.size(); ++p) {
    if (!entries[p].trainable) continue;
    ad::Tensor& w = entries[p].value;
    const ad::Tensor& g = grads[p];
    if (!g.same_shape(w)) throw ShapeError("adam_step: gradient shape mismatch for " + entries[p].name);
    ad::Tensor& m = state.m[p];
    ad::Tensor& v = state.v[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

}  // namespace beamgat::train
