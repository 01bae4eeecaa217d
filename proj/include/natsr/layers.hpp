#pragma once

#include <random>
#include <string>

#include "natsr/autodiff.hpp"
#include "natsr/ops.hpp"

// Parameter creation and binding shared by every network.
namespace natsr::nn {

// Registers `<prefix>.weight` (k, k, cin, cout) with He-normal values and,
// when `bias` is set, a zero `<prefix>.bias` (cout).
void add_conv(ParameterSet& params, const std::string& prefix, int k, int cin, int cout, std::mt19937_64& rng,
              bool bias = true, double gain = 2.0);

// Registers a zero tensor.
void add_zero(ParameterSet& params, const std::string& name, Shape shape, bool buffer = false);

// Binds a parameter to `g`: trainable leaf unless the set is frozen or
// `trainable` is false, in which case the value enters as a constant.
Var bind(Graph& g, ParameterSet& params, const std::string& name, bool trainable = true);

// Same-padded convolution using `<prefix>.weight` and, if present,
// `<prefix>.bias`.
Var conv(Graph& g, ParameterSet& params, const std::string& prefix, Var x, int stride = 1,
         ops::PadMode pad = ops::PadMode::kZero, bool trainable = true);

// Closed-form scalar count of a k×k conv layer.
inline std::size_t conv_param_count(int k, int cin, int cout, bool bias = true) {
  return static_cast<std::size_t>(k) * k * cin * cout + (bias ? static_cast<std::size_t>(cout) : 0);
}

}  // namespace natsr::nn
