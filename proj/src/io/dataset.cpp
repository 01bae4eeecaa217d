#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "natsr/dataset.hpp"
#include "natsr/error.hpp"
#include "natsr/image.hpp"
#include "natsr/png_io.hpp"

#ifndef NATSR_BUNDLED_DATA_DIR
#define NATSR_BUNDLED_DATA_DIR "data/natural"
#endif

namespace natsr {

namespace fs = std::filesystem;

std::string default_data_dir() {
  if (const char* env = std::getenv("NATSR_DATA_DIR"); env && *env) return env;
  return NATSR_BUNDLED_DATA_DIR;
}

std::vector<NamedImage> load_image_dir(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("load_image_dir: " + dir + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (entry.is_regular_file() && ext == ".png") files.push_back(entry.path());
  }
  if (files.empty()) throw IoError("load_image_dir: no PNG files in " + dir);
  std::sort(files.begin(), files.end());
  std::vector<NamedImage> out;
  for (const fs::path& p : files) out.push_back({p.stem().string(), load_image(p.string())});
  return out;
}

HoldoutSplit split_holdout(const Tensor& img, double fraction, int align) {
  require_rank4(img, "split_holdout");
  if (!(fraction > 0.0 && fraction < 1.0)) throw ValueError("split_holdout: fraction must lie in (0, 1)");
  if (align <= 0) throw ValueError("split_holdout: align must be positive");
  const int h = image_height(img), w = image_width(img);
  const int cut = static_cast<int>(std::floor(w * (1.0 - fraction)));
  const int ha = h / align * align;
  const int wt = cut / align * align;
  const int wv = (w - cut) / align * align;
  if (ha == 0 || wt == 0 || wv == 0) {
    throw ShapeError("split_holdout: image " + to_string(img.shape()) + " too small for alignment " + std::to_string(align));
  }
  return {crop(img, 0, 0, 0, ha, wt), crop(img, 0, 0, cut, ha, wv)};
}

Corpus load_corpus(const std::string& dir, double holdout, int align) {
  Corpus c;
  for (NamedImage& n : load_image_dir(dir)) {
    HoldoutSplit s = split_holdout(n.image, holdout, align);
    c.names.push_back(n.name);
    c.train.push_back(std::move(s.train));
    c.val.push_back(std::move(s.val));
  }
  return c;
}

std::vector<Tensor> patch_pool(const std::vector<Tensor>& images, const PatchOptions& options, std::mt19937_64& rng) {
  std::vector<Tensor> pool;
  for (const Tensor& img : images)
    for (Tensor& p : extract_patches(img, options, rng)) pool.push_back(std::move(p));
  if (pool.empty()) throw ValueError("patch_pool: no patches passed the filters");
  return pool;
}

}  // namespace natsr
