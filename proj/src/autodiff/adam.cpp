#include "natsr/adam.hpp"

#include <cmath>

#include "natsr/error.hpp"

namespace natsr {

AdamState make_adam_state(const ParameterSet& params, double beta1, double beta2, double eps) {
  AdamState s;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params[i];
    s.m.push_back(p.buffer ? Tensor() : Tensor::zeros_like(p.value));
    s.v.push_back(p.buffer ? Tensor() : Tensor::zeros_like(p.value));
  }
  return s;
}

void adam_step(ParameterSet& params, AdamState& state, double lr) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("adam_step: state tracks " + std::to_string(state.m.size()) + " tensors, set has " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params[i];
    if (p.buffer) continue;
    if (p.grad.shape() != p.value.shape() || state.m[i].shape() != p.value.shape()) {
      throw ShapeError("adam_step: shape mismatch for parameter '" + p.name + "'");
    }
    if (!p.grad.all_finite()) throw DivergenceError("adam_step: non-finite gradient in '" + p.name + "'");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    if (p.buffer) continue;
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g;
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g * g;
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p.value[k] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace natsr
