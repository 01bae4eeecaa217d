#pragma once

#include <optional>
#include <vector>

#include "natsr/autodiff.hpp"

// Differentiable operations recorded on a Graph. Image-like operands are rank-4
// (batch, height, width, channels).
namespace natsr::ops {

enum class PadMode { kZero, kReflect };

struct Padding {
  PadMode mode = PadMode::kZero;
  int before = 0;  // rows/cols added before the first sample
  int after = 0;   // rows/cols added after the last sample

  static Padding valid() { return {}; }
  // Output extent ceil(H / stride) for odd kernels.
  static Padding same(int kernel, PadMode mode = PadMode::kZero) {
    return {mode, (kernel - 1) / 2, kernel / 2};
  }
  int total() const { return before + after; }
};

int conv_output_extent(int in, int kernel, int stride, const Padding& pad);

// weight: (kh, kw, cin, cout); bias: (cout). Output extent
// floor((H + pad_total - kh) / stride) + 1.
Var conv2d(Graph& g, Var input, Var weight, std::optional<Var> bias, int stride, const Padding& pad);

enum class Activation { kRelu, kSigmoid };
Var activation(Graph& g, Var x, Activation kind);
Var relu(Graph& g, Var x);
Var sigmoid(Graph& g, Var x);
Var leaky_relu(Graph& g, Var x, double slope);

// (batch, h, w, c) -> (batch, 1, 1, c) spatial mean.
Var global_avg_pool(Graph& g, Var x);
// 2x2 window, stride 2. Odd trailing rows/columns are dropped.
Var max_pool2(Graph& g, Var x);

// Channel-to-pixel order: out(n, y*b + i, x*b + j, c) = in(n, y, x, (i*b + j)*C + c),
// with C = channels / b².
Var depth_to_space(Graph& g, Var x, int block);
Var space_to_depth(Graph& g, Var x, int block);

Var concat_channels(Graph& g, const std::vector<Var>& xs);
Var slice_batch(Graph& g, Var x, int begin, int end);
Var concat_batch(Graph& g, const std::vector<Var>& xs);
Var reshape(Graph& g, Var x, Shape shape);

Var add(Graph& g, Var a, Var b);
Var sub(Graph& g, Var a, Var b);
Var mul(Graph& g, Var a, Var b);
Var scale(Graph& g, Var x, double factor);
Var add_scalar(Graph& g, Var x, double c);
// x - s, where s holds a single element.
Var sub_broadcast(Graph& g, Var x, Var s);
// x / s, where s holds a single element.
Var div_broadcast(Graph& g, Var x, Var s);

Var abs(Graph& g, Var x);
// Elementwise clamp; gradient is zero where the clamp is active.
Var clamp(Graph& g, Var x, double lo, double hi);
Var log(Graph& g, Var x);

// Reductions to a single-element tensor of shape (1).
Var sum(Graph& g, Var x);
Var mean(Graph& g, Var x);

// Mean over the elements selected by `mask` (1 = selected). Empty selection
// yields zero.
Var masked_mean(Graph& g, Var x, const std::vector<int>& mask);

// Spectral normalisation of a weight reshaped to (cout, rest). Runs `iters`
// power iterations starting from the persistent vector `u` (length cout,
// updated in place), then returns weight / max(sigma, eps) with
// sigma = u^T W v. The gradient flows through W and sigma with u, v held
// constant.
struct SpectralResult {
  Var weight;
  double sigma = 0.0;
};
inline constexpr double kSpectralEps = 1e-12;
SpectralResult spectral_normalize(Graph& g, Var weight, Tensor& u, int iters, bool update_u = true);

// Power-iteration estimate of the top singular value of a (kh, kw, cin, cout)
// weight, without touching a graph.
double spectral_sigma(const Tensor& weight, Tensor& u, int iters);

}  // namespace natsr::ops
