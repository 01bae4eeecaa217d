#include <cmath>

#include <spdlog/spdlog.h>

#include "natsr/error.hpp"
#include "natsr/image.hpp"
#include "natsr/manifold.hpp"
#include "natsr/metrics.hpp"

namespace natsr {

const char* label_name(ManifoldLabel label) {
  switch (label) {
    case ManifoldLabel::kNatural:
      return "natural";
    case ManifoldLabel::kBlurry:
      return "blurry";
    case ManifoldLabel::kNoisy:
      return "noisy";
  }
  return "?";
}

BlurrySample synth_blurry(const Tensor& hr, const ResamplerSpec& spec, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValueError("synth_blurry: alpha must lie in [0, 1], got " + std::to_string(alpha));
  BlurrySample s;
  s.alpha = alpha;
  s.lr = degrade(hr, spec);
  if (alpha == 1.0) {
    s.image = hr;
    return s;
  }
  s.image = interpolate(s.lr, spec);
  if (alpha == 0.0) return s;
  for (std::size_t i = 0; i < s.image.size(); ++i) s.image[i] = (1.0 - alpha) * s.image[i] + alpha * hr[i];
  return s;
}

NoisySample synth_noisy(const Tensor& hr, double sigma, const DctLayout& layout, std::uint64_t seed,
                        const NoisyOptions& options) {
  if (!(sigma > 0.0)) throw ValueError("synth_noisy: sigma must be positive, got " + std::to_string(sigma));
  layout.validate();
  require_rank4(hr, "synth_noisy");
  const int b = layout.block;
  if (hr.dim(1) % b != 0 || hr.dim(2) % b != 0) {
    throw ShapeError("synth_noisy: extent " + std::to_string(hr.dim(1)) + "x" + std::to_string(hr.dim(2)) +
                     " not divisible by block " + std::to_string(b));
  }
  // The transform is linear, so noise is synthesised on a zero image and the
  // same field is added to hr: image - hr equals the field exactly.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  Tensor coeffs(hr.shape());
  for (int n = 0; n < hr.dim(0); ++n)
    for (int by = 0; by < hr.dim(1); by += b)
      for (int bx = 0; bx < hr.dim(2); bx += b)
        for (int c = 0; c < hr.dim(3); ++c)
          for (auto [r, col] : layout.mask) coeffs.at(n, by + r, bx + col, c) = normal(rng);
  Tensor noise = idct2_blockwise(coeffs, layout);
  if (options.restrict_to_stopband_scale) {
    const Tensor passband = lowpass(noise, {*options.restrict_to_stopband_scale, KernelKind::kIdeal});
    for (std::size_t i = 0; i < noise.size(); ++i) noise[i] -= passband[i];
  }

  NoisySample s;
  s.sigma = sigma;
  s.seed = seed;
  s.mask = layout.mask;
  s.image = hr;
  for (std::size_t i = 0; i < noise.size(); ++i) s.image[i] += noise[i];
  s.noise = std::move(noise);
  if (options.clip) {
    s.clipped = clip_unit(s.image);
    s.clip_rate = static_cast<double>(s.clipped) / static_cast<double>(s.image.size());
    if (options.log_clipping && s.clip_rate > kClipWarnRate) {
      spdlog::warn("synth_noisy: sigma {} clipped {:.2f}% of pixels", sigma, 100.0 * s.clip_rate);
    } else if (options.log_clipping) {
      spdlog::debug("synth_noisy: sigma {} clipped {:.3f}% of pixels", sigma, 100.0 * s.clip_rate);
    }
  }
  return s;
}

double verify_membership(const Tensor& candidate, const Tensor& lr, const ResamplerSpec& spec) {
  require_rank4(candidate, "verify_membership");
  require_rank4(lr, "verify_membership");
  if (candidate.dim(0) != lr.dim(0) || candidate.dim(1) != lr.dim(1) * spec.scale ||
      candidate.dim(2) != lr.dim(2) * spec.scale || candidate.dim(3) != lr.dim(3)) {
    throw ShapeError("verify_membership: candidate " + to_string(candidate.shape()) + " is not lr " +
                     to_string(lr.shape()) + " x" + std::to_string(spec.scale));
  }
  return psnr(degrade(candidate, spec), lr);
}

}  // namespace natsr
