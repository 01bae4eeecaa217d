#pragma once

#include <cstdint>
#include <vector>

#include "natsr/autodiff.hpp"

namespace natsr {

// First/second moment estimates for every parameter of a ParameterSet, in set
// order. Buffers get empty slots.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

AdamState make_adam_state(const ParameterSet& params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// One bias-corrected Adam update using Parameter::grad. Every gradient is
// checked for finiteness before anything is mutated; a NaN/Inf raises
// DivergenceError and leaves params and state untouched.
void adam_step(ParameterSet& params, AdamState& state, double lr);

}  // namespace natsr
