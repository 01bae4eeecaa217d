#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <vector>

#include "natsr/error.hpp"
#include "natsr/image.hpp"
#include "natsr/png_io.hpp"

namespace natsr {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

void on_png_warning(png_structp, png_const_charp) {}

// libpng reports errors by longjmp; nothing between setjmp and the calls
// below owns a destructor, so the jump is safe.
bool read_rows(std::FILE* f, std::vector<unsigned char>& pixels, png_uint_32& w, png_uint_32& h, int& depth) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, on_png_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  png_bytep* volatile rows = nullptr;
  if (setjmp(png_jmpbuf(png))) {
    png_free(png, const_cast<png_bytep*>(rows));
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, f);
  png_read_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
  }
  if (depth < 8) depth = 8;
  png_read_update_info(png, info);
  const png_size_t stride = png_get_rowbytes(png, info);
  if (stride != static_cast<png_size_t>(w) * 3 * (depth / 8)) png_error(png, "unexpected row layout");
  pixels.resize(stride * h);
  rows = static_cast<png_bytep*>(png_malloc(png, sizeof(png_bytep) * h));
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels.data() + y * stride;
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  png_free(png, const_cast<png_bytep*>(rows));
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool write_rows(std::FILE* f, const std::vector<unsigned char>& pixels, png_uint_32 w, png_uint_32 h, int channels,
                int depth) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, on_png_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, w, h, depth, channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const png_size_t stride = static_cast<png_size_t>(w) * channels * (depth / 8);
  for (png_uint_32 y = 0; y < h; ++y) png_write_row(png, pixels.data() + y * stride);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

Tensor load_image(const std::string& path) {
  File f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("load_image: cannot open " + path);
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError("load_image: " + path + " is not a PNG file");
  }
  std::rewind(f.get());
  std::vector<unsigned char> px;
  png_uint_32 w = 0, h = 0;
  int depth = 8;
  if (!read_rows(f.get(), px, w, h, depth)) throw IoError("load_image: malformed PNG " + path);
  Tensor img = make_image(static_cast<int>(h), static_cast<int>(w), 3);
  const double maxv = depth == 16 ? 65535.0 : 255.0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    const unsigned v = depth == 16 ? (static_cast<unsigned>(px[2 * i]) << 8) | px[2 * i + 1] : px[i];
    img[i] = v / maxv;
  }
  return img;
}

void save_image(const Tensor& img, const std::string& path, int bit_depth) {
  require_rank4(img, "save_image");
  if (img.dim(0) != 1) throw ShapeError("save_image: expected a single image, got batch " + std::to_string(img.dim(0)));
  const int c = img.dim(3);
  if (c != 1 && c != 3) throw ShapeError("save_image: expected 1 or 3 channels, got " + std::to_string(c));
  if (bit_depth != 8 && bit_depth != 16) throw ValueError("save_image: bit depth must be 8 or 16");
  const double maxv = bit_depth == 16 ? 65535.0 : 255.0;
  const std::size_t bytes = bit_depth / 8;
  std::vector<unsigned char> px(img.size() * bytes);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = std::isnan(img[i]) ? 0.0 : std::clamp(img[i], 0.0, 1.0);
    const auto q = static_cast<unsigned>(std::floor(v * maxv + 0.5));
    if (bytes == 2) {
      px[2 * i] = static_cast<unsigned char>(q >> 8);
      px[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
    } else {
      px[i] = static_cast<unsigned char>(q);
    }
  }
  File f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("save_image: cannot write " + path);
  if (!write_rows(f.get(), px, img.dim(2), img.dim(1), c, bit_depth)) throw IoError("save_image: libpng failed on " + path);
}

}  // namespace natsr
