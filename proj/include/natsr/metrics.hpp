#pragma once

#include <vector>

#include "natsr/tensor.hpp"

// Full-reference image quality metrics on [0, 1]-valued rank-4 images.
namespace natsr {

enum class PsnrDomain { kRgb, kLuma };

// Reported in place of +inf for identical inputs, and the upper cap for all.
inline constexpr double kPsnrSentinel = 99.0;

struct PsnrOptions {
  PsnrDomain domain = PsnrDomain::kRgb;
  double peak = 1.0;
  int shave = 0;  // border pixels dropped on every side
};

double mean_squared_error(const Tensor& a, const Tensor& b, int shave = 0);
double psnr(const Tensor& a, const Tensor& b, const PsnrOptions& options = {});

// ITU-R BT.601 luma, 0.299 R + 0.587 G + 0.114 B. Single-channel input is
// returned unchanged.
Tensor to_luma(const Tensor& rgb);

struct SsimOptions {
  int window = 11;
  double gaussian_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
  int shave = 0;
};

// Mean of the local SSIM map over the valid region, averaged over channels
// and batch items. Throws ShapeError when the image is smaller than the
// window.
double ssim(const Tensor& a, const Tensor& b, const SsimOptions& options = {});

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  std::size_t count = 0;
};
Summary summarize(const std::vector<double>& values);

}  // namespace natsr
