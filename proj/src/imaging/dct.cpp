#include "natsr/dct.hpp"

#include <cmath>
#include <numbers>

#include "natsr/error.hpp"

namespace natsr {

DctLayout DctLayout::standard() {
  DctLayout l;
  for (int i = 0; i < 8; ++i) l.mask.emplace_back(7, i);
  for (int i = 0; i < 7; ++i) l.mask.emplace_back(i, 7);
  return l;
}

void DctLayout::validate() const {
  if (block < 2) throw ValueError("DctLayout: block must be at least 2");
  for (auto [r, c] : mask) {
    const bool inside = r >= 0 && c >= 0 && r < block && c < block;
    if (!inside || (r != block - 1 && c != block - 1)) {
      throw ValueError("DctLayout: mask entry (" + std::to_string(r) + "," + std::to_string(c) +
                       ") is outside the last row and column");
    }
  }
}

std::vector<double> dct_matrix(int n) {
  std::vector<double> c(static_cast<std::size_t>(n) * n);
  for (int u = 0; u < n; ++u) {
    const double a = u == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i) c[u * n + i] = a * std::cos(std::numbers::pi * (2 * i + 1) * u / (2.0 * n));
  }
  return c;
}

namespace {

// forward: Y = C X C^T; inverse: X = C^T Y C.
Tensor blockwise(const Tensor& in, const DctLayout& layout, bool inverse) {
  require_rank4(in, inverse ? "idct2_blockwise" : "dct2_blockwise");
  const int b = layout.block;
  if (in.dim(1) % b != 0 || in.dim(2) % b != 0) {
    throw ShapeError(std::string(inverse ? "idct2_blockwise" : "dct2_blockwise") + ": extent " +
                     std::to_string(in.dim(1)) + "x" + std::to_string(in.dim(2)) + " not divisible by block " +
                     std::to_string(b));
  }
  const std::vector<double> c = dct_matrix(b);
  auto m = [&](int i, int j) { return inverse ? c[j * b + i] : c[i * b + j]; };
  Tensor out(in.shape());
  std::vector<double> x(b * b), tmp(b * b);
  const int n = in.dim(0), ch = in.dim(3);
  for (int bn = 0; bn < n; ++bn)
    for (int by = 0; by < in.dim(1); by += b)
      for (int bx = 0; bx < in.dim(2); bx += b)
        for (int k = 0; k < ch; ++k) {
          for (int i = 0; i < b; ++i)
            for (int j = 0; j < b; ++j) x[i * b + j] = in.at(bn, by + i, bx + j, k);
          for (int u = 0; u < b; ++u)
            for (int j = 0; j < b; ++j) {
              double acc = 0.0;
              for (int i = 0; i < b; ++i) acc += m(u, i) * x[i * b + j];
              tmp[u * b + j] = acc;
            }
          for (int u = 0; u < b; ++u)
            for (int v = 0; v < b; ++v) {
              double acc = 0.0;
              for (int j = 0; j < b; ++j) acc += tmp[u * b + j] * m(v, j);
              out.at(bn, by + u, bx + v, k) = acc;
            }
        }
  return out;
}

}  // namespace

Tensor dct2_blockwise(const Tensor& img, const DctLayout& layout) { return blockwise(img, layout, false); }
Tensor idct2_blockwise(const Tensor& coeffs, const DctLayout& layout) { return blockwise(coeffs, layout, true); }

}  // namespace natsr
