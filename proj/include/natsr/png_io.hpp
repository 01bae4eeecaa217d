#pragma once

#include <string>

#include "natsr/tensor.hpp"

namespace natsr {

// Reads an 8- or 16-bit PNG as a (1, H, W, 3) image in [0, 1], normalised by
// the file's bit depth. Gray and palette files are expanded to RGB; alpha is
// dropped. Throws IoError on unreadable or malformed files.
Tensor load_image(const std::string& path);

// Writes a batch-1 image with 1 or 3 channels. Values are clamped to [0, 1]
// and quantised by round-half-up: q = floor(v · max + 0.5).
void save_image(const Tensor& img, const std::string& path, int bit_depth = 8);

}  // namespace natsr
