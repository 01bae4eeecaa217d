#pragma once

#include <random>
#include <string>
#include <vector>

#include "natsr/patches.hpp"
#include "natsr/tensor.hpp"

namespace natsr {

struct NamedImage {
  std::string name;  // file stem
  Tensor image;
};

// NATSR_DATA_DIR when set, otherwise the bundled sample images.
std::string default_data_dir();

// Every *.png in `dir`, sorted by file name. Throws IoError when the
// directory is missing or holds no PNG files.
std::vector<NamedImage> load_image_dir(const std::string& dir);

// Column split: `val` holds the columns at or beyond (1 - fraction) · width,
// `train` everything to the left. Both parts are cropped so their extents
// are multiples of `align`.
struct HoldoutSplit {
  Tensor train;
  Tensor val;
};
HoldoutSplit split_holdout(const Tensor& img, double fraction, int align = 1);

struct Corpus {
  std::vector<std::string> names;
  std::vector<Tensor> train;
  std::vector<Tensor> val;
};
Corpus load_corpus(const std::string& dir, double holdout, int align);

// `options.count` random crops from every image, concatenated.
std::vector<Tensor> patch_pool(const std::vector<Tensor>& images, const PatchOptions& options, std::mt19937_64& rng);

}  // namespace natsr
