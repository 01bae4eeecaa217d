#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "natsr/dct.hpp"
#include "natsr/resample.hpp"

// Synthetic "unnatural" images that still degrade to the same LR image:
// blurry samples (set A) and high-frequency noisy samples (set B).
namespace natsr {

enum class ManifoldLabel { kNatural, kBlurry, kNoisy };

const char* label_name(ManifoldLabel label);
// 1 for natural images, 0 for both unnatural sets.
inline double label_target(ManifoldLabel label) { return label == ManifoldLabel::kNatural ? 1.0 : 0.0; }

struct BlurrySample {
  Tensor image;  // (1 - alpha) · interpolate(lr) + alpha · hr
  Tensor lr;     // degrade(hr)
  double alpha = 0.0;
};

// Throws ValueError unless 0 <= alpha <= 1, ShapeError on indivisible extents.
BlurrySample synth_blurry(const Tensor& hr, const ResamplerSpec& spec, double alpha);

struct NoisyOptions {
  // Clamp the result into [0, 1] after the inverse transform.
  bool clip = true;
  // When set, the injected field is additionally projected onto the stopband
  // of this ideal resampler (n <- n - h(n)) so that h(n)↓ vanishes exactly.
  std::optional<int> restrict_to_stopband_scale;
  // Emit the clip-rate log line for this sample.
  bool log_clipping = true;
};

struct NoisySample {
  Tensor image;
  Tensor noise;  // image - hr before clipping
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::pair<int, int>> mask;
  std::size_t clipped = 0;
  double clip_rate = 0.0;
};

// Adds i.i.d. N(0, sigma²) to every masked DCT coefficient of every block and
// channel. Throws ValueError unless sigma > 0.
NoisySample synth_noisy(const Tensor& hr, double sigma, const DctLayout& layout, std::uint64_t seed,
                        const NoisyOptions& options = {});

// Clip rates above this fraction are reported as warnings.
inline constexpr double kClipWarnRate = 0.01;

// PSNR (RGB, peak 1) between degrade(candidate) and lr; identical images map
// to the 99 dB sentinel.
double verify_membership(const Tensor& candidate, const Tensor& lr, const ResamplerSpec& spec);

}  // namespace natsr
