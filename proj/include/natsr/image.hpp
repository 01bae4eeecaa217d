#pragma once

#include <cstddef>
#include <vector>

#include "natsr/tensor.hpp"

// Images are rank-4 tensors (batch, height, width, channels) with values in
// [0, 1]. A single image has batch 1. The helpers below are shape plumbing.
namespace natsr {

Tensor make_image(int height, int width, int channels, double fill = 0.0);

inline int image_height(const Tensor& t) { return t.dim(1); }
inline int image_width(const Tensor& t) { return t.dim(2); }
inline int image_channels(const Tensor& t) { return t.dim(3); }

// Copy of the window [y, y+h) x [x, x+w) of batch item n, as a batch-1 image.
Tensor crop(const Tensor& img, int n, int y, int x, int h, int w);

// Batch item n as a batch-1 image.
Tensor batch_item(const Tensor& batch, int n);

// Concatenation along the batch axis; all items must share H, W, C.
Tensor stack_batch(const std::vector<Tensor>& items);

// Clamps every value into [0, 1]; returns the number of values changed.
std::size_t clip_unit(Tensor& img);

// Mirror index into [0, n) without repeating the edge sample (…2 1 0 1 2…).
int reflect_index(int i, int n);

}  // namespace natsr
