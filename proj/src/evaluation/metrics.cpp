#include "natsr/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "natsr/error.hpp"

namespace natsr {
namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  require_rank4(a, op);
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

void require_shave(const Tensor& a, int shave, const char* op) {
  if (shave < 0 || 2 * shave >= a.dim(1) || 2 * shave >= a.dim(2)) {
    throw ShapeError(std::string(op) + ": shave " + std::to_string(shave) + " leaves no pixels of " +
                     to_string(a.shape()));
  }
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> g(size);
  const double c = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    g[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// Valid-region separable filtering of an h×w plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w, const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  const int oh = h - k + 1, ow = w - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(oh) * w);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += g[i] * plane[static_cast<std::size_t>(y + i) * w + x];
      rows[static_cast<std::size_t>(y) * w + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += g[i] * rows[static_cast<std::size_t>(y) * w + x + i];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace

double mean_squared_error(const Tensor& a, const Tensor& b, int shave) {
  require_same(a, b, "mean_squared_error");
  require_shave(a, shave, "mean_squared_error");
  double acc = 0.0;
  std::size_t count = 0;
  for (int n = 0; n < a.dim(0); ++n)
    for (int y = shave; y < a.dim(1) - shave; ++y)
      for (int x = shave; x < a.dim(2) - shave; ++x)
        for (int c = 0; c < a.dim(3); ++c) {
          const double d = a.at(n, y, x, c) - b.at(n, y, x, c);
          acc += d * d;
          ++count;
        }
  return acc / static_cast<double>(count);
}

Tensor to_luma(const Tensor& rgb) {
  require_rank4(rgb, "to_luma");
  if (rgb.dim(3) == 1) return rgb;
  if (rgb.dim(3) != 3) throw ShapeError("to_luma: expected 1 or 3 channels, got " + std::to_string(rgb.dim(3)));
  Tensor y({rgb.dim(0), rgb.dim(1), rgb.dim(2), 1});
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = 0.299 * rgb[3 * i] + 0.587 * rgb[3 * i + 1] + 0.114 * rgb[3 * i + 2];
  return y;
}

double psnr(const Tensor& a, const Tensor& b, const PsnrOptions& options) {
  require_same(a, b, "psnr");
  const double e = options.domain == PsnrDomain::kLuma ? mean_squared_error(to_luma(a), to_luma(b), options.shave)
                                                      : mean_squared_error(a, b, options.shave);
  if (e <= 0.0) return kPsnrSentinel;
  return std::min(kPsnrSentinel, 10.0 * std::log10(options.peak * options.peak / e));
}

double ssim(const Tensor& a, const Tensor& b, const SsimOptions& options) {
  require_same(a, b, "ssim");
  require_shave(a, options.shave, "ssim");
  const int h = a.dim(1) - 2 * options.shave, w = a.dim(2) - 2 * options.shave;
  if (h < options.window || w < options.window) {
    throw ShapeError("ssim: image " + std::to_string(h) + "x" + std::to_string(w) + " smaller than window " +
                     std::to_string(options.window));
  }
  const std::vector<double> g = gaussian_window(options.window, options.gaussian_sigma);
  const double c1 = std::pow(options.k1 * options.dynamic_range, 2);
  const double c2 = std::pow(options.k2 * options.dynamic_range, 2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<double> pa(plane), pb(plane), paa(plane), pbb(plane), pab(plane);
  double total = 0.0;
  int planes = 0;
  for (int n = 0; n < a.dim(0); ++n)
    for (int c = 0; c < a.dim(3); ++c) {
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          const double va = a.at(n, y + options.shave, x + options.shave, c);
          const double vb = b.at(n, y + options.shave, x + options.shave, c);
          pa[i] = va;
          pb[i] = vb;
          paa[i] = va * va;
          pbb[i] = vb * vb;
          pab[i] = va * vb;
        }
      const auto ma = filter_valid(pa, h, w, g), mb = filter_valid(pb, h, w, g);
      const auto maa = filter_valid(paa, h, w, g), mbb = filter_valid(pbb, h, w, g), mab = filter_valid(pab, h, w, g);
      double acc = 0.0;
      for (std::size_t i = 0; i < ma.size(); ++i) {
        const double va = maa[i] - ma[i] * ma[i];
        const double vb = mbb[i] - mb[i] * mb[i];
        const double cov = mab[i] - ma[i] * mb[i];
        acc += ((2.0 * ma[i] * mb[i] + c1) * (2.0 * cov + c2)) /
               ((ma[i] * ma[i] + mb[i] * mb[i] + c1) * (va + vb + c2));
      }
      total += acc / static_cast<double>(ma.size());
      ++planes;
    }
  return total / planes;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  double acc = 0.0;
  for (double v : values) acc += v;
  s.mean = acc / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

}  // namespace natsr
