#include <Eigen/Core>

#include "natsr/error.hpp"
#include "natsr/ops.hpp"

namespace natsr::ops {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

// source[o * k + t]: input coordinate read by output o at kernel tap t, or -1
// for a zero-padded sample.
std::vector<int> tap_sources(int in, int out, int kernel, int stride, const Padding& pad) {
  std::vector<int> src(static_cast<std::size_t>(out) * kernel);
  for (int o = 0; o < out; ++o)
    for (int t = 0; t < kernel; ++t) {
      int i = o * stride + t - pad.before;
      if (i < 0 || i >= in) i = pad.mode == PadMode::kZero ? -1 : reflect_index(i, in);
      src[static_cast<std::size_t>(o) * kernel + t] = i;
    }
  return src;
}

struct ConvGeometry {
  int batch, in_h, in_w, cin, kh, kw, cout, out_h, out_w;
  std::vector<int> rows, cols;
  bool direct = false;  // 1x1, stride 1, no padding: im2col is the input itself

  std::size_t patch_len() const { return static_cast<std::size_t>(kh) * kw * cin; }
  std::size_t out_pixels() const { return static_cast<std::size_t>(out_h) * out_w; }
};

void im2col(const ConvGeometry& geo, const double* image, double* col) {
  const std::size_t k_len = geo.patch_len();
  for (int oy = 0; oy < geo.out_h; ++oy)
    for (int ox = 0; ox < geo.out_w; ++ox) {
      double* dst = col + (static_cast<std::size_t>(oy) * geo.out_w + ox) * k_len;
      for (int ky = 0; ky < geo.kh; ++ky) {
        const int iy = geo.rows[static_cast<std::size_t>(oy) * geo.kh + ky];
        for (int kx = 0; kx < geo.kw; ++kx, dst += geo.cin) {
          const int ix = geo.cols[static_cast<std::size_t>(ox) * geo.kw + kx];
          if (iy < 0 || ix < 0) {
            std::fill_n(dst, geo.cin, 0.0);
          } else {
            std::copy_n(image + (static_cast<std::size_t>(iy) * geo.in_w + ix) * geo.cin, geo.cin, dst);
          }
        }
      }
    }
}

void col2im_add(const ConvGeometry& geo, const double* col, double* image) {
  const std::size_t k_len = geo.patch_len();
  for (int oy = 0; oy < geo.out_h; ++oy)
    for (int ox = 0; ox < geo.out_w; ++ox) {
      const double* src = col + (static_cast<std::size_t>(oy) * geo.out_w + ox) * k_len;
      for (int ky = 0; ky < geo.kh; ++ky) {
        const int iy = geo.rows[static_cast<std::size_t>(oy) * geo.kh + ky];
        for (int kx = 0; kx < geo.kw; ++kx, src += geo.cin) {
          const int ix = geo.cols[static_cast<std::size_t>(ox) * geo.kw + kx];
          if (iy < 0 || ix < 0) continue;
          double* dst = image + (static_cast<std::size_t>(iy) * geo.in_w + ix) * geo.cin;
          for (int c = 0; c < geo.cin; ++c) dst[c] += src[c];
        }
      }
    }
}

}  // namespace

int conv_output_extent(int in, int kernel, int stride, const Padding& pad) {
  const int span = in + pad.total() - kernel;
  return span < 0 ? 0 : span / stride + 1;
}

Var conv2d(Graph& g, Var input, Var weight, std::optional<Var> bias, int stride, const Padding& pad) {
  const Tensor& x = g.value(input);
  const Tensor& w = g.value(weight);
  require_rank4(x, "conv2d input");
  if (w.rank() != 4) throw ShapeError("conv2d: weight must be (kh, kw, cin, cout), got " + to_string(w.shape()));
  if (stride <= 0) throw ValueError("conv2d: stride must be positive");
  if (x.dim(3) != w.dim(2)) {
    throw ShapeError("conv2d: input channels " + std::to_string(x.dim(3)) + " != weight cin " +
                     std::to_string(w.dim(2)));
  }
  if (bias) {
    const Tensor& b = g.value(*bias);
    if (b.size() != static_cast<std::size_t>(w.dim(3))) {
      throw ShapeError("conv2d: bias length " + std::to_string(b.size()) + " != cout " + std::to_string(w.dim(3)));
    }
  }
  if (pad.mode == PadMode::kReflect && (pad.before >= x.dim(1) || pad.before >= x.dim(2))) {
    throw ShapeError("conv2d: reflect padding " + std::to_string(pad.before) + " exceeds input extent " +
                     to_string(x.shape()));
  }

  auto geo = std::make_shared<ConvGeometry>();
  geo->batch = x.dim(0);
  geo->in_h = x.dim(1);
  geo->in_w = x.dim(2);
  geo->cin = x.dim(3);
  geo->kh = w.dim(0);
  geo->kw = w.dim(1);
  geo->cout = w.dim(3);
  geo->out_h = conv_output_extent(geo->in_h, geo->kh, stride, pad);
  geo->out_w = conv_output_extent(geo->in_w, geo->kw, stride, pad);
  if (geo->out_h <= 0) throw ShapeError("conv2d: height " + std::to_string(geo->in_h) + " too small for kernel");
  if (geo->out_w <= 0) throw ShapeError("conv2d: width " + std::to_string(geo->in_w) + " too small for kernel");
  geo->rows = tap_sources(geo->in_h, geo->out_h, geo->kh, stride, pad);
  geo->cols = tap_sources(geo->in_w, geo->out_w, geo->kw, stride, pad);
  geo->direct = geo->kh == 1 && geo->kw == 1 && stride == 1 && pad.total() == 0;

  const std::size_t P = geo->out_pixels();
  const std::size_t K = geo->patch_len();
  const std::size_t in_stride = static_cast<std::size_t>(geo->in_h) * geo->in_w * geo->cin;
  Tensor out({geo->batch, geo->out_h, geo->out_w, geo->cout});
  ConstMapMat wm(w.ptr(), K, geo->cout);
  std::vector<double> col(geo->direct ? 0 : P * K);
  for (int b = 0; b < geo->batch; ++b) {
    const double* src = x.ptr() + in_stride * b;
    if (!geo->direct) im2col(*geo, src, col.data());
    ConstMapMat cm(geo->direct ? src : col.data(), P, K);
    MapMat om(out.ptr() + P * geo->cout * b, P, geo->cout);
    om.noalias() = cm * wm;
    if (bias) {
      const Tensor& bv = g.value(*bias);
      for (std::size_t p = 0; p < P; ++p)
        for (int c = 0; c < geo->cout; ++c) om(p, c) += bv[c];
    }
  }

  std::vector<Var> inputs{input, weight};
  if (bias) inputs.push_back(*bias);
  return g.record(std::move(out), inputs, [input, weight, bias, geo, in_stride](Graph& gr, const Tensor& gy) {
    const std::size_t P = geo->out_pixels();
    const std::size_t K = geo->patch_len();
    const Tensor& x = gr.value(input);
    const Tensor& w = gr.value(weight);
    Tensor* gx = gr.grad_target(input);
    Tensor* gw = gr.grad_target(weight);
    Tensor* gb = bias ? gr.grad_target(*bias) : nullptr;
    ConstMapMat wm(w.ptr(), K, geo->cout);
    std::vector<double> col(geo->direct ? 0 : P * K);
    std::vector<double> dcol(gx && !geo->direct ? P * K : 0);
    for (int b = 0; b < geo->batch; ++b) {
      ConstMapMat gym(gy.ptr() + P * geo->cout * b, P, geo->cout);
      if (gw) {
        const double* src = x.ptr() + in_stride * b;
        if (!geo->direct) im2col(*geo, src, col.data());
        ConstMapMat cm(geo->direct ? src : col.data(), P, K);
        MapMat gwm(gw->ptr(), K, geo->cout);
        gwm.noalias() += cm.transpose() * gym;
      }
      if (gx) {
        if (geo->direct) {
          MapMat gxm(gx->ptr() + in_stride * b, P, K);
          gxm.noalias() += gym * wm.transpose();
        } else {
          MapMat dm(dcol.data(), P, K);
          dm.noalias() = gym * wm.transpose();
          col2im_add(*geo, dcol.data(), gx->ptr() + in_stride * b);
        }
      }
      if (gb) {
        for (std::size_t p = 0; p < P; ++p)
          for (int c = 0; c < geo->cout; ++c) (*gb)[c] += gym(p, c);
      }
    }
  });
}

}  // namespace natsr::ops
