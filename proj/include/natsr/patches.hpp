#pragma once

#include <random>
#include <vector>

#include "natsr/manifold.hpp"
#include "natsr/tensor.hpp"

namespace natsr {

struct PatchOptions {
  int size = 32;
  // Strided tiling when > 0; otherwise `count` random crops.
  int stride = 0;
  int count = 1;
  // Crop origins are multiples of `align` so LR and HR grids line up.
  int align = 1;
  // Crops whose mean absolute gradient is below this value are skipped.
  double min_gradient = 0.0;
  // Random crops get one of the 8 flips/transposes of the square.
  bool augment = false;
};

// Crops of a batch-1 image. Throws ShapeError when size exceeds an extent.
std::vector<Tensor> extract_patches(const Tensor& img, const PatchOptions& options, std::mt19937_64& rng);

// Element k in [0, 8) of the dihedral group on a square batch-1 image:
// bit 0 mirrors x, bit 1 mirrors y, bit 2 transposes.
Tensor dihedral(const Tensor& img, int k);

// Mean absolute horizontal plus vertical finite difference.
double mean_gradient(const Tensor& img);

// A labelled NMD training/validation batch.
struct NmdBatch {
  Tensor images;                      // (batch, size, size, channels)
  std::vector<ManifoldLabel> labels;  // one per batch item
  std::vector<double> targets;        // 1 natural, 0 unnatural
  std::size_t clipped = 0;            // pixels clipped in noisy samples
};

enum class NegativeMix {
  kBalanced,     // unnatural half split blurry/noisy, odd item to blurry
  kBlurryOnly,
  kNoisyOnly,
};

struct NmdBatchOptions {
  int batch_size = 8;
  double alpha = 0.5;
  double sigma = 0.1;
  NegativeMix mix = NegativeMix::kBalanced;
};

// Half the batch are raw natural patches, half are synthesised from other
// pool patches. Deterministic for a given rng state.
NmdBatch make_nmd_batch(const std::vector<Tensor>& pool, const NmdBatchOptions& options, const ResamplerSpec& spec,
                        std::mt19937_64& rng);

}  // namespace natsr
