#pragma once

#include <utility>
#include <vector>

#include "natsr/tensor.hpp"

namespace natsr {

// Blockwise orthonormal DCT-II layout with the set of coefficient positions
// that noise injection may touch.
struct DctLayout {
  int block = 8;
  std::vector<std::pair<int, int>> mask;  // (row, col) within a block

  // 8×8 blocks, mask = last row ∪ last column (15 coefficients).
  static DctLayout standard();

  // Throws ValueError unless every mask entry lies in the last row or column.
  void validate() const;
};

// Coefficient (u, v) of each block is stored at the block's pixel (u, v), per
// channel. Extents must be divisible by the block size.
Tensor dct2_blockwise(const Tensor& img, const DctLayout& layout);
Tensor idct2_blockwise(const Tensor& coeffs, const DctLayout& layout);

// Orthonormal DCT-II matrix, C[u][n] = a_u cos(pi (2n + 1) u / 2N).
std::vector<double> dct_matrix(int n);

}  // namespace natsr
