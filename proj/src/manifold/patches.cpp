#include "natsr/patches.hpp"

#include <cmath>

#include "natsr/error.hpp"
#include "natsr/image.hpp"

namespace natsr {

double mean_gradient(const Tensor& img) {
  require_rank4(img, "mean_gradient");
  double acc = 0.0;
  std::size_t count = 0;
  for (int n = 0; n < img.dim(0); ++n)
    for (int y = 0; y < img.dim(1); ++y)
      for (int x = 0; x < img.dim(2); ++x)
        for (int c = 0; c < img.dim(3); ++c) {
          if (x + 1 < img.dim(2)) {
            acc += std::abs(img.at(n, y, x + 1, c) - img.at(n, y, x, c));
            ++count;
          }
          if (y + 1 < img.dim(1)) {
            acc += std::abs(img.at(n, y + 1, x, c) - img.at(n, y, x, c));
            ++count;
          }
        }
  return count ? acc / static_cast<double>(count) : 0.0;
}

Tensor dihedral(const Tensor& img, int k) {
  require_rank4(img, "dihedral");
  const int n = img.dim(1), ch = img.dim(3);
  if (img.dim(0) != 1 || img.dim(2) != n) throw ShapeError("dihedral: expects a square batch-1 image");
  if (k < 0 || k >= 8) throw ValueError("dihedral: element must lie in [0, 8)");
  Tensor out(img.shape());
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      int sy = (k & 4) ? x : y, sx = (k & 4) ? y : x;
      if (k & 1) sx = n - 1 - sx;
      if (k & 2) sy = n - 1 - sy;
      for (int c = 0; c < ch; ++c) out.at(0, y, x, c) = img.at(0, sy, sx, c);
    }
  return out;
}

std::vector<Tensor> extract_patches(const Tensor& img, const PatchOptions& options, std::mt19937_64& rng) {
  require_rank4(img, "extract_patches");
  const int h = img.dim(1), w = img.dim(2), s = options.size;
  if (s <= 0 || s > h || s > w) {
    throw ShapeError("extract_patches: patch size " + std::to_string(s) + " does not fit image " +
                     std::to_string(h) + "x" + std::to_string(w));
  }
  if (options.align <= 0) throw ValueError("extract_patches: align must be positive");
  std::vector<Tensor> out;
  auto keep = [&](Tensor p) {
    if (options.min_gradient <= 0.0 || mean_gradient(p) >= options.min_gradient) out.push_back(std::move(p));
  };
  if (options.stride > 0) {
    if (options.stride % options.align != 0) throw ValueError("extract_patches: stride must be a multiple of align");
    for (int y = 0; y + s <= h; y += options.stride)
      for (int x = 0; x + s <= w; x += options.stride) keep(crop(img, 0, y, x, s, s));
    return out;
  }
  const int ny = (h - s) / options.align, nx = (w - s) / options.align;
  std::uniform_int_distribution<int> uy(0, ny), ux(0, nx), flip(0, 7);
  // Bounded retries keep the low-gradient filter from looping on flat images.
  const int max_draws = options.count * (options.min_gradient > 0.0 ? 20 : 1);
  for (int draw = 0; draw < max_draws && static_cast<int>(out.size()) < options.count; ++draw) {
    const int y = uy(rng) * options.align, x = ux(rng) * options.align;
    keep(options.augment ? dihedral(crop(img, 0, y, x, s, s), flip(rng)) : crop(img, 0, y, x, s, s));
  }
  return out;
}

}  // namespace natsr
