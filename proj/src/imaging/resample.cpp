#include "natsr/resample.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include "natsr/error.hpp"
#include "natsr/image.hpp"

namespace natsr {
namespace {

void require_scale(int scale, const char* op) {
  if (scale < 1) throw ValueError(std::string(op) + ": scale must be positive, got " + std::to_string(scale));
}

// Applies `line_op(in, out)` to every line of `img` along `axis` (1 = rows of
// samples indexed by y, 2 = x), producing lines of length `out_len`.
template <typename LineOp>
Tensor map_axis(const Tensor& img, int axis, int out_len, LineOp line_op) {
  require_rank4(img, "resample");
  Shape shape = img.shape();
  const int in_len = shape[axis];
  shape[axis] = out_len;
  Tensor out(shape);
  const int n = shape[0], c = shape[3];
  const int other = axis == 1 ? shape[2] : shape[1];
  std::vector<double> in_line(in_len), out_line(out_len);
  for (int b = 0; b < n; ++b)
    for (int o = 0; o < other; ++o)
      for (int ch = 0; ch < c; ++ch) {
        for (int i = 0; i < in_len; ++i) in_line[i] = axis == 1 ? img.at(b, i, o, ch) : img.at(b, o, i, ch);
        line_op(in_line, out_line);
        for (int i = 0; i < out_len; ++i) (axis == 1 ? out.at(b, i, o, ch) : out.at(b, o, i, ch)) = out_line[i];
      }
  return out;
}

template <typename LineOpFactory>
Tensor separable(const Tensor& img, int out_h, int out_w, LineOpFactory make_op) {
  Tensor rows = map_axis(img, 1, out_h, make_op(img.dim(1), out_h));
  return map_axis(rows, 2, out_w, make_op(img.dim(2), out_w));
}

// Band-limiting matrix. The grid-aligned cosine kept at the LR Nyquist
// frequency gets weight 2/L in the orthogonal projector and 1/L otherwise.
std::vector<double> band_matrix(int length, int scale, bool projector) {
  require_scale(scale, "ideal_projector");
  if (length <= 0) throw ShapeError("ideal_projector: non-positive length");
  const double L = length;
  // Bins |k| < L / (2s) are kept whole. When the LR Nyquist frequency is an
  // exact bin, only its cosine phase (aligned with the sampling grid) is kept.
  const bool nyquist_bin = length % (2 * scale) == 0 && scale > 1;
  const int kmax = nyquist_bin ? length / (2 * scale) - 1 : (length - 1) / (2 * scale);
  const double nyquist_weight = projector ? 2.0 / L : 1.0 / L;
  std::vector<double> p(static_cast<std::size_t>(length) * length);
  for (int n = 0; n < length; ++n)
    for (int m = 0; m < length; ++m) {
      double acc = 1.0;
      for (int k = 1; k <= kmax; ++k) acc += 2.0 * std::cos(2.0 * std::numbers::pi * k * (n - m) / L);
      acc /= L;
      if (nyquist_bin) acc += nyquist_weight * std::cos(std::numbers::pi * n / scale) * std::cos(std::numbers::pi * m / scale);
      p[static_cast<std::size_t>(n) * length + m] = acc;
    }
  return p;
}

std::shared_ptr<const std::vector<double>> cached_band_matrix(int length, int scale, bool projector) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, bool>, std::shared_ptr<const std::vector<double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{length, scale, projector}];
  if (!slot) slot = std::make_shared<const std::vector<double>>(band_matrix(length, scale, projector));
  return slot;
}

// y = gain · B[rows of `step`] · x, writing lines of length in_len / step.
auto ideal_line(int scale, int step, double gain, bool projector = true) {
  return [scale, step, gain, projector](int in_len, int) {
    auto p = cached_band_matrix(in_len, scale, projector);
    return [p, in_len, step, gain](const std::vector<double>& in, std::vector<double>& out) {
      for (std::size_t o = 0; o < out.size(); ++o) {
        const double* row = p->data() + o * step * static_cast<std::size_t>(in_len);
        double acc = 0.0;
        for (int m = 0; m < in_len; ++m) acc += row[m] * in[m];
        out[o] = gain * acc;
      }
    };
  };
}

}  // namespace

const char* kernel_name(KernelKind k) { return k == KernelKind::kIdeal ? "ideal" : "bicubic"; }

KernelKind parse_kernel(const std::string& name) {
  if (name == "bicubic") return KernelKind::kBicubic;
  if (name == "ideal") return KernelKind::kIdeal;
  throw ValueError("kernel must be \"bicubic\" or \"ideal\", got \"" + name + "\"");
}

double keys_cubic(double x, double a) {
  const double t = std::abs(x);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

PolyphaseKernel make_kernel(const ResamplerSpec& spec) {
  if (spec.scale < 2 || spec.scale > 8) {
    throw ValueError("make_kernel: unsupported scale " + std::to_string(spec.scale) + " (supported: 2..8)");
  }
  PolyphaseKernel k;
  k.scale = spec.scale;
  for (int p = 0; p < spec.scale; ++p) {
    std::array<double, 5> taps{};
    double total = 0.0;
    for (int j = 0; j < 5; ++j) {
      taps[j] = keys_cubic(static_cast<double>(p) / spec.scale - (j - 2));
      total += taps[j];
    }
    for (double& t : taps) t /= total;
    k.phases.push_back(taps);
  }
  return k;
}

std::vector<double> lowpass_taps(int scale) {
  require_scale(scale, "lowpass_taps");
  std::vector<double> h;
  double total = 0.0;
  for (int k = -(2 * scale - 1); k <= 2 * scale - 1; ++k) {
    h.push_back(keys_cubic(static_cast<double>(k) / scale) / scale);
    total += h.back();
  }
  for (double& t : h) t /= total;
  return h;
}

std::vector<double> ideal_projector(int length, int scale) { return band_matrix(length, scale, true); }

Tensor lowpass(const Tensor& img, const ResamplerSpec& spec) {
  require_rank4(img, "lowpass");
  require_scale(spec.scale, "lowpass");
  if (spec.scale == 1) return img;
  if (spec.kernel == KernelKind::kIdeal) return separable(img, img.dim(1), img.dim(2), ideal_line(spec.scale, 1, 1.0));
  const std::vector<double> h = lowpass_taps(spec.scale);
  const int half = static_cast<int>(h.size() / 2);
  return separable(img, img.dim(1), img.dim(2), [&h, half](int len, int) {
    return [&h, half, len](const std::vector<double>& in, std::vector<double>& out) {
      for (int n = 0; n < len; ++n) {
        double acc = 0.0;
        for (int k = -half; k <= half; ++k) acc += h[k + half] * in[reflect_index(n + k, len)];
        out[n] = acc;
      }
    };
  });
}

Tensor downsample(const Tensor& img, int scale) {
  require_rank4(img, "downsample");
  require_scale(scale, "downsample");
  if (img.dim(1) % scale != 0 || img.dim(2) % scale != 0) {
    throw ShapeError("downsample: extent " + std::to_string(img.dim(1)) + "x" + std::to_string(img.dim(2)) +
                     " not divisible by scale " + std::to_string(scale));
  }
  if (scale == 1) return img;
  const int n = img.dim(0), h = img.dim(1) / scale, w = img.dim(2) / scale, c = img.dim(3);
  Tensor out({n, h, w, c});
  for (int b = 0; b < n; ++b)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < c; ++ch) out.at(b, y, x, ch) = img.at(b, y * scale, x * scale, ch);
  return out;
}

Tensor upsample_zero(const Tensor& img, int scale) {
  require_rank4(img, "upsample_zero");
  require_scale(scale, "upsample_zero");
  if (scale == 1) return img;
  const int n = img.dim(0), h = img.dim(1), w = img.dim(2), c = img.dim(3);
  Tensor out({n, h * scale, w * scale, c});
  for (int b = 0; b < n; ++b)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < c; ++ch) out.at(b, y * scale, x * scale, ch) = img.at(b, y, x, ch);
  return out;
}

Tensor interpolate(const Tensor& lr, const ResamplerSpec& spec) {
  require_rank4(lr, "interpolate");
  require_scale(spec.scale, "interpolate");
  const int s = spec.scale;
  if (s == 1) return lr;
  if (spec.kernel == KernelKind::kIdeal) {
    // The inverse of ↓ restricted to the band the projector keeps. It is
    // s · P · ↑ except that the Nyquist cosine carries half the projector's
    // weight, since ↑ aliases it onto itself twice.
    return separable(upsample_zero(lr, s), lr.dim(1) * s, lr.dim(2) * s,
                     ideal_line(s, 1, static_cast<double>(s), false));
  }
  const PolyphaseKernel k = make_kernel(spec);
  return separable(lr, lr.dim(1) * s, lr.dim(2) * s, [&k, s](int in_len, int) {
    return [&k, s, in_len](const std::vector<double>& in, std::vector<double>& out) {
      for (int y = 0; y < in_len; ++y)
        for (int p = 0; p < s; ++p) {
          const auto& taps = k.phases[p];
          double acc = 0.0;
          for (int j = 0; j < 5; ++j) acc += taps[j] * in[reflect_index(y + j - 2, in_len)];
          out[static_cast<std::size_t>(y) * s + p] = acc;
        }
    };
  });
}

Tensor degrade(const Tensor& hr, const ResamplerSpec& spec) {
  require_rank4(hr, "degrade");
  require_scale(spec.scale, "degrade");
  const int s = spec.scale;
  if (hr.dim(1) % s != 0 || hr.dim(2) % s != 0) {
    throw ShapeError("degrade: extent " + std::to_string(hr.dim(1)) + "x" + std::to_string(hr.dim(2)) +
                     " not divisible by scale " + std::to_string(s));
  }
  if (s == 1) return hr;
  const int out_h = hr.dim(1) / s, out_w = hr.dim(2) / s;
  if (spec.kernel == KernelKind::kIdeal) return separable(hr, out_h, out_w, ideal_line(s, s, 1.0));
  const std::vector<double> h = lowpass_taps(s);
  const int half = static_cast<int>(h.size() / 2);
  return separable(hr, out_h, out_w, [&h, half, s](int len, int) {
    return [&h, half, s, len](const std::vector<double>& in, std::vector<double>& out) {
      for (std::size_t o = 0; o < out.size(); ++o) {
        const int n = static_cast<int>(o) * s;
        double acc = 0.0;
        for (int k = -half; k <= half; ++k) acc += h[k + half] * in[reflect_index(n + k, len)];
        out[o] = acc;
      }
    };
  });
}

std::array<double, 64> kernel_dct_spectrum(int scale) {
  const std::vector<double> h = lowpass_taps(scale);
  const int half = static_cast<int>(h.size() / 2);
  std::array<double, 8> response{};
  for (int u = 0; u < 8; ++u) {
    const double w = std::numbers::pi * u / 8.0;
    double acc = 0.0;
    for (int k = -half; k <= half; ++k) acc += h[k + half] * std::cos(w * k);
    response[u] = std::abs(acc);
  }
  std::array<double, 64> out{};
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) out[u * 8 + v] = response[u] * response[v];
  return out;
}

}  // namespace natsr
