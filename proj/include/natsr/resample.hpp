#pragma once

#include <array>
#include <string>
#include <vector>

#include "natsr/tensor.hpp"

// Degradation operators: low-pass h, downsampler, zero-insertion upsampler,
// and their compositions. All operators act separably on rank-4 images.
namespace natsr {

enum class KernelKind {
  kBicubic,  // Keys cubic convolution, a = -0.5, reflect boundary
  kIdeal,    // exact band-limiting projector, periodic boundary
};

const char* kernel_name(KernelKind k);
KernelKind parse_kernel(const std::string& name);

struct ResamplerSpec {
  int scale = 4;
  KernelKind kernel = KernelKind::kBicubic;
};

// Keys cubic convolution kernel.
double keys_cubic(double x, double a = -0.5);

// Interpolation taps. Output sample y*s + p is sum_k phases[p][k] * lr[y + k - 2]
// for k in [0, 5); phase 0 is the on-grid sample.
struct PolyphaseKernel {
  int scale = 0;
  std::vector<std::array<double, 5>> phases;
};

// Throws ValueError for scales outside [2, 8].
PolyphaseKernel make_kernel(const ResamplerSpec& spec);

// Anti-aliasing filter used by lowpass/degrade in bicubic mode:
// h[k] = K(k / s) / s for |k| < 2s, listed from k = -(2s - 1). Sums to 1.
std::vector<double> lowpass_taps(int scale);

Tensor lowpass(const Tensor& img, const ResamplerSpec& spec);

// Keeps samples 0, s, 2s, … in each spatial dimension.
Tensor downsample(const Tensor& img, int scale);
Tensor upsample_zero(const Tensor& img, int scale);

// Interpolation of an LR image to ×s size. In bicubic mode the result equals
// s² · h(lr↑) with reflect extension of lr; on-grid samples reproduce lr.
Tensor interpolate(const Tensor& lr, const ResamplerSpec& spec);

// h(hr) followed by ↓. Extents must be divisible by the scale.
Tensor degrade(const Tensor& hr, const ResamplerSpec& spec);

// Dense L×L matrix of the ideal low-pass projector for one dimension.
std::vector<double> ideal_projector(int length, int scale);

// Magnitude response of the bicubic anti-aliasing kernel at the 8×8 DCT
// frequencies, as an 8×8 row-major array |H(πu/8)|·|H(πv/8)|.
std::array<double, 64> kernel_dct_spectrum(int scale);

}  // namespace natsr
