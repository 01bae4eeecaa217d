#include <algorithm>
#include <cmath>

#include "natsr/error.hpp"
#include "natsr/ops.hpp"

namespace natsr::ops {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": operand shapes " + to_string(a.shape()) + " and " +
                     to_string(b.shape()) + " differ");
  }
}

void require_single(const Tensor& s, const char* op) {
  if (s.size() != 1) throw ShapeError(std::string(op) + ": scalar operand has shape " + to_string(s.shape()));
}

// Elementwise unary op with derivative expressed through input and output.
template <class F, class D>
Var unary(Graph& g, Var x, F f, D df) {
  const Tensor& xv = g.value(x);
  Tensor out = Tensor::zeros_like(xv);
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return g.record(std::move(out), {x}, [x, df](Graph& gr, const Tensor& gy) {
    Tensor* gx = gr.grad_target(x);
    if (!gx) return;
    const Tensor& xv = gr.value(x);
    for (std::size_t i = 0; i < xv.size(); ++i) (*gx)[i] += gy[i] * df(xv[i]);
  });
}

}  // namespace

Var relu(Graph& g, Var x) {
  return unary(
      g, x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Var leaky_relu(Graph& g, Var x, double slope) {
  return unary(
      g, x, [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v) { return v > 0.0 ? 1.0 : slope; });
}

Var sigmoid(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  Tensor out = Tensor::zeros_like(xv);
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double v = xv[i];
    out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  Tensor y = out;
  return g.record(std::move(out), {x}, [x, y = std::move(y)](Graph& gr, const Tensor& gy) {
    if (Tensor* gx = gr.grad_target(x)) {
      for (std::size_t i = 0; i < y.size(); ++i) (*gx)[i] += gy[i] * y[i] * (1.0 - y[i]);
    }
  });
}

Var activation(Graph& g, Var x, Activation kind) {
  return kind == Activation::kRelu ? relu(g, x) : sigmoid(g, x);
}

Var abs(Graph& g, Var x) {
  return unary(
      g, x, [](double v) { return std::abs(v); },
      [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Var clamp(Graph& g, Var x, double lo, double hi) {
  return unary(
      g, x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Var log(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  for (std::size_t i = 0; i < xv.size(); ++i) {
    if (!(xv[i] > 0.0)) throw ValueError("log: non-positive argument; clamp before taking the log");
  }
  return unary(
      g, x, [](double v) { return std::log(v); }, [](double v) { return 1.0 / v; });
}

Var scale(Graph& g, Var x, double factor) {
  return unary(
      g, x, [factor](double v) { return v * factor; }, [factor](double) { return factor; });
}

Var add_scalar(Graph& g, Var x, double c) {
  return unary(
      g, x, [c](double v) { return v + c; }, [](double) { return 1.0; });
}

Var add(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require_same_shape(av, bv, "add");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return g.record(std::move(out), {a, b}, [a, b](Graph& gr, const Tensor& gy) {
    if (Tensor* ga = gr.grad_target(a))
      for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i];
    if (Tensor* gb = gr.grad_target(b))
      for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] += gy[i];
  });
}

Var sub(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require_same_shape(av, bv, "sub");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return g.record(std::move(out), {a, b}, [a, b](Graph& gr, const Tensor& gy) {
    if (Tensor* ga = gr.grad_target(a))
      for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i];
    if (Tensor* gb = gr.grad_target(b))
      for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] -= gy[i];
  });
}

Var mul(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require_same_shape(av, bv, "mul");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return g.record(std::move(out), {a, b}, [a, b](Graph& gr, const Tensor& gy) {
    const Tensor& av = gr.value(a);
    const Tensor& bv = gr.value(b);
    if (Tensor* ga = gr.grad_target(a))
      for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * bv[i];
    if (Tensor* gb = gr.grad_target(b))
      for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] += gy[i] * av[i];
  });
}

Var sub_broadcast(Graph& g, Var x, Var s) {
  const Tensor& xv = g.value(x);
  require_single(g.value(s), "sub_broadcast");
  const double sv = g.value(s)[0];
  Tensor out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= sv;
  return g.record(std::move(out), {x, s}, [x, s](Graph& gr, const Tensor& gy) {
    if (Tensor* gx = gr.grad_target(x))
      for (std::size_t i = 0; i < gy.size(); ++i) (*gx)[i] += gy[i];
    if (Tensor* gs = gr.grad_target(s)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < gy.size(); ++i) acc += gy[i];
      (*gs)[0] -= acc;
    }
  });
}

Var div_broadcast(Graph& g, Var x, Var s) {
  const Tensor& xv = g.value(x);
  require_single(g.value(s), "div_broadcast");
  const double sv = g.value(s)[0];
  Tensor out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= sv;
  return g.record(std::move(out), {x, s}, [x, s](Graph& gr, const Tensor& gy) {
    const double sv = gr.value(s)[0];
    if (Tensor* gx = gr.grad_target(x))
      for (std::size_t i = 0; i < gy.size(); ++i) (*gx)[i] += gy[i] / sv;
    if (Tensor* gs = gr.grad_target(s)) {
      const Tensor& xv = gr.value(x);
      double acc = 0.0;
      for (std::size_t i = 0; i < gy.size(); ++i) acc += gy[i] * xv[i];
      (*gs)[0] -= acc / (sv * sv);
    }
  });
}

Var sum(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  double acc = 0.0;
  for (double v : xv.data()) acc += v;
  return g.record(Tensor::scalar(acc), {x}, [x](Graph& gr, const Tensor& gy) {
    if (Tensor* gx = gr.grad_target(x))
      for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += gy[0];
  });
}

Var mean(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  if (xv.empty()) throw ShapeError("mean: empty tensor");
  double acc = 0.0;
  for (double v : xv.data()) acc += v;
  const double n = static_cast<double>(xv.size());
  return g.record(Tensor::scalar(acc / n), {x}, [x, n](Graph& gr, const Tensor& gy) {
    if (Tensor* gx = gr.grad_target(x))
      for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += gy[0] / n;
  });
}

Var masked_mean(Graph& g, Var x, const std::vector<int>& mask) {
  const Tensor& xv = g.value(x);
  if (mask.size() != xv.size()) {
    throw ShapeError("masked_mean: mask length " + std::to_string(mask.size()) + " vs " +
                     std::to_string(xv.size()) + " elements");
  }
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    if (mask[i]) {
      acc += xv[i];
      ++count;
    }
  }
  const double n = count ? static_cast<double>(count) : 1.0;
  return g.record(Tensor::scalar(acc / n), {x}, [x, mask, n](Graph& gr, const Tensor& gy) {
    if (Tensor* gx = gr.grad_target(x))
      for (std::size_t i = 0; i < gx->size(); ++i)
        if (mask[i]) (*gx)[i] += gy[0] / n;
  });
}

Var reshape(Graph& g, Var x, Shape shape) {
  Tensor out = g.value(x).reshaped(std::move(shape));
  return g.record(std::move(out), {x}, [x](Graph& gr, const Tensor& gy) {
    if (Tensor* gx = gr.grad_target(x))
      for (std::size_t i = 0; i < gy.size(); ++i) (*gx)[i] += gy[i];
  });
}

Var global_avg_pool(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  require_rank4(xv, "global_avg_pool");
  const int n = xv.dim(0), h = xv.dim(1), w = xv.dim(2), c = xv.dim(3);
  if (h == 0 || w == 0) throw ShapeError("global_avg_pool: zero spatial extent " + to_string(xv.shape()));
  Tensor out({n, 1, 1, c});
  const double inv = 1.0 / (static_cast<double>(h) * w);
  for (int b = 0; b < n; ++b)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx)
        for (int ch = 0; ch < c; ++ch) out.at(b, 0, 0, ch) += xv.at(b, y, xx, ch);
  for (double& v : out.data()) v *= inv;
  return g.record(std::move(out), {x}, [x, inv](Graph& gr, const Tensor& gy) {
    Tensor* gx = gr.grad_target(x);
    if (!gx) return;
    const int n = gx->dim(0), h = gx->dim(1), w = gx->dim(2), c = gx->dim(3);
    for (int b = 0; b < n; ++b)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx)
          for (int ch = 0; ch < c; ++ch) gx->at(b, y, xx, ch) += gy.at(b, 0, 0, ch) * inv;
  });
}

Var max_pool2(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  require_rank4(xv, "max_pool2");
  const int n = xv.dim(0), h = xv.dim(1) / 2, w = xv.dim(2) / 2, c = xv.dim(3);
  if (h == 0 || w == 0) throw ShapeError("max_pool2: input " + to_string(xv.shape()) + " too small");
  Tensor out({n, h, w, c});
  std::vector<std::size_t> argmax(out.size());
  const int in_w = xv.dim(2);
  std::size_t o = 0;
  for (int b = 0; b < n; ++b)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx)
        for (int ch = 0; ch < c; ++ch, ++o) {
          std::size_t best = 0;
          double bv = -INFINITY;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t idx =
                  ((static_cast<std::size_t>(b) * xv.dim(1) + 2 * y + dy) * in_w + 2 * xx + dx) * c + ch;
              if (xv[idx] > bv) {
                bv = xv[idx];
                best = idx;
              }
            }
          out[o] = bv;
          argmax[o] = best;
        }
  return g.record(std::move(out), {x}, [x, argmax = std::move(argmax)](Graph& gr, const Tensor& gy) {
    if (Tensor* gx = gr.grad_target(x))
      for (std::size_t i = 0; i < gy.size(); ++i) (*gx)[argmax[i]] += gy[i];
  });
}

namespace {

// Index map shared by depth_to_space and its inverse: for each element of the
// shallow (depth) layout, the flat index in the deep-spatial layout.
std::vector<std::size_t> d2s_index(int n, int h, int w, int c_in, int block) {
  const int c_out = c_in / (block * block);
  std::vector<std::size_t> map(static_cast<std::size_t>(n) * h * w * c_in);
  const int oh = h * block, ow = w * block;
  std::size_t k = 0;
  for (int b = 0; b < n; ++b)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < c_in; ++ch, ++k) {
          const int cell = ch / c_out;
          const int co = ch % c_out;
          const int i = cell / block, j = cell % block;
          map[k] = ((static_cast<std::size_t>(b) * oh + y * block + i) * ow + x * block + j) * c_out + co;
        }
  return map;
}

}  // namespace

Var depth_to_space(Graph& g, Var x, int block) {
  const Tensor& xv = g.value(x);
  require_rank4(xv, "depth_to_space");
  if (block <= 0) throw ValueError("depth_to_space: block must be positive");
  const int c = xv.dim(3);
  if (c % (block * block) != 0) {
    throw ShapeError("depth_to_space: channels " + std::to_string(c) + " not divisible by block^2 = " +
                     std::to_string(block * block));
  }
  auto map = d2s_index(xv.dim(0), xv.dim(1), xv.dim(2), c, block);
  Tensor out({xv.dim(0), xv.dim(1) * block, xv.dim(2) * block, c / (block * block)});
  for (std::size_t k = 0; k < map.size(); ++k) out[map[k]] = xv[k];
  return g.record(std::move(out), {x}, [x, map = std::move(map)](Graph& gr, const Tensor& gy) {
    if (Tensor* gx = gr.grad_target(x))
      for (std::size_t k = 0; k < map.size(); ++k) (*gx)[k] += gy[map[k]];
  });
}

Var space_to_depth(Graph& g, Var x, int block) {
  const Tensor& xv = g.value(x);
  require_rank4(xv, "space_to_depth");
  if (block <= 0) throw ValueError("space_to_depth: block must be positive");
  if (xv.dim(1) % block != 0) {
    throw ShapeError("space_to_depth: height " + std::to_string(xv.dim(1)) + " not divisible by block");
  }
  if (xv.dim(2) % block != 0) {
    throw ShapeError("space_to_depth: width " + std::to_string(xv.dim(2)) + " not divisible by block");
  }
  const int h = xv.dim(1) / block, w = xv.dim(2) / block, c = xv.dim(3) * block * block;
  auto map = d2s_index(xv.dim(0), h, w, c, block);
  Tensor out({xv.dim(0), h, w, c});
  for (std::size_t k = 0; k < map.size(); ++k) out[k] = xv[map[k]];
  return g.record(std::move(out), {x}, [x, map = std::move(map)](Graph& gr, const Tensor& gy) {
    if (Tensor* gx = gr.grad_target(x))
      for (std::size_t k = 0; k < map.size(); ++k) (*gx)[map[k]] += gy[k];
  });
}

Var concat_channels(Graph& g, const std::vector<Var>& xs) {
  if (xs.empty()) throw ShapeError("concat_channels: no inputs");
  const Tensor& first = g.value(xs[0]);
  require_rank4(first, "concat_channels");
  int total = 0;
  std::vector<int> widths;
  for (Var v : xs) {
    const Tensor& t = g.value(v);
    require_rank4(t, "concat_channels");
    for (int d = 0; d < 3; ++d) {
      if (t.dim(d) != first.dim(d)) {
        throw ShapeError("concat_channels: dimension " + std::to_string(d) + " mismatch " +
                         to_string(t.shape()) + " vs " + to_string(first.shape()));
      }
    }
    widths.push_back(t.dim(3));
    total += t.dim(3);
  }
  const std::size_t pixels = static_cast<std::size_t>(first.dim(0)) * first.dim(1) * first.dim(2);
  Tensor out({first.dim(0), first.dim(1), first.dim(2), total});
  int offset = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const Tensor& t = g.value(xs[k]);
    const int cw = widths[k];
    for (std::size_t p = 0; p < pixels; ++p)
      std::copy_n(t.ptr() + p * cw, cw, out.ptr() + p * total + offset);
    offset += cw;
  }
  return g.record(std::move(out), xs, [xs, widths, total, pixels](Graph& gr, const Tensor& gy) {
    int offset = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const int cw = widths[k];
      if (Tensor* gx = gr.grad_target(xs[k])) {
        for (std::size_t p = 0; p < pixels; ++p)
          for (int c = 0; c < cw; ++c) (*gx)[p * cw + c] += gy[p * total + offset + c];
      }
      offset += cw;
    }
  });
}

Var slice_batch(Graph& g, Var x, int begin, int end) {
  const Tensor& xv = g.value(x);
  if (xv.rank() < 1 || begin < 0 || end > xv.dim(0) || begin >= end) {
    throw ShapeError("slice_batch: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for shape " + to_string(xv.shape()));
  }
  Shape shape = xv.shape();
  const std::size_t per = xv.size() / static_cast<std::size_t>(shape[0]);
  shape[0] = end - begin;
  Tensor out(shape);
  std::copy_n(xv.ptr() + per * begin, per * (end - begin), out.ptr());
  return g.record(std::move(out), {x}, [x, per, begin](Graph& gr, const Tensor& gy) {
    if (Tensor* gx = gr.grad_target(x))
      for (std::size_t i = 0; i < gy.size(); ++i) (*gx)[per * begin + i] += gy[i];
  });
}

Var concat_batch(Graph& g, const std::vector<Var>& xs) {
  if (xs.empty()) throw ShapeError("concat_batch: no inputs");
  Shape shape = g.value(xs[0]).shape();
  int batch = 0;
  for (Var v : xs) {
    const Tensor& t = g.value(v);
    if (t.rank() != static_cast<int>(shape.size()) ||
        !std::equal(shape.begin() + 1, shape.end(), t.shape().begin() + 1)) {
      throw ShapeError("concat_batch: shape " + to_string(t.shape()) + " incompatible with " + to_string(shape));
    }
    batch += t.dim(0);
  }
  shape[0] = batch;
  Tensor out(shape);
  std::size_t offset = 0;
  std::vector<std::size_t> offsets;
  for (Var v : xs) {
    const Tensor& t = g.value(v);
    offsets.push_back(offset);
    std::copy_n(t.ptr(), t.size(), out.ptr() + offset);
    offset += t.size();
  }
  return g.record(std::move(out), xs, [xs, offsets](Graph& gr, const Tensor& gy) {
    for (std::size_t k = 0; k < xs.size(); ++k) {
      if (Tensor* gx = gr.grad_target(xs[k]))
        for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += gy[offsets[k] + i];
    }
  });
}

}  // namespace natsr::ops
