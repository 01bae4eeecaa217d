#include "natsr/image.hpp"

#include <algorithm>

#include "natsr/error.hpp"

namespace natsr {

Tensor make_image(int height, int width, int channels, double fill) {
  if (height <= 0 || width <= 0 || channels <= 0) {
    throw ShapeError("make_image: non-positive extent " + to_string({height, width, channels}));
  }
  return Tensor({1, height, width, channels}, fill);
}

Tensor crop(const Tensor& img, int n, int y, int x, int h, int w) {
  require_rank4(img, "crop");
  if (n < 0 || n >= img.dim(0)) throw ShapeError("crop: batch index " + std::to_string(n) + " out of range");
  if (y < 0 || x < 0 || h <= 0 || w <= 0 || y + h > img.dim(1) || x + w > img.dim(2)) {
    throw ShapeError("crop: window (" + std::to_string(y) + "," + std::to_string(x) + ") " + std::to_string(h) + "x" +
                     std::to_string(w) + " exceeds image " + to_string(img.shape()));
  }
  const int c = img.dim(3);
  Tensor out({1, h, w, c});
  for (int yy = 0; yy < h; ++yy) {
    const double* src =
        img.ptr() + ((static_cast<std::size_t>(n) * img.dim(1) + y + yy) * img.dim(2) + x) * c;
    std::copy_n(src, static_cast<std::size_t>(w) * c, &out.at(0, yy, 0, 0));
  }
  return out;
}

Tensor batch_item(const Tensor& batch, int n) {
  require_rank4(batch, "batch_item");
  return crop(batch, n, 0, 0, batch.dim(1), batch.dim(2));
}

Tensor stack_batch(const std::vector<Tensor>& items) {
  if (items.empty()) throw ShapeError("stack_batch: no items");
  const Tensor& first = items.front();
  require_rank4(first, "stack_batch");
  int total = 0;
  for (const Tensor& t : items) {
    require_rank4(t, "stack_batch");
    if (t.dim(1) != first.dim(1) || t.dim(2) != first.dim(2) || t.dim(3) != first.dim(3)) {
      throw ShapeError("stack_batch: item " + to_string(t.shape()) + " does not match " + to_string(first.shape()));
    }
    total += t.dim(0);
  }
  Tensor out({total, first.dim(1), first.dim(2), first.dim(3)});
  double* dst = out.ptr();
  for (const Tensor& t : items) dst = std::copy(t.data().begin(), t.data().end(), dst);
  return out;
}

std::size_t clip_unit(Tensor& img) {
  std::size_t changed = 0;
  for (double& v : img.data()) {
    if (v < 0.0) {
      v = 0.0;
      ++changed;
    } else if (v > 1.0) {
      v = 1.0;
      ++changed;
    }
  }
  return changed;
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace natsr
