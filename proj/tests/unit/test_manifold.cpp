#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "natsr/error.hpp"
#include "natsr/image.hpp"
#include "natsr/manifold.hpp"
#include "natsr/metrics.hpp"
#include "natsr/patches.hpp"

using namespace natsr;

namespace {

NoisyOptions unclipped() {
  NoisyOptions o;
  o.clip = false;
  return o;
}

Tensor random_image(int h, int w, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor t = make_image(h, w, c);
  for (double& v : t.data()) v = u(rng);
  return t;
}

// Smooth mid-range content so clipping never triggers.
Tensor smooth_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 6.28);
  const double p1 = u(rng), p2 = u(rng);
  Tensor t = make_image(h, w, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        t.at(0, y, x, c) = 0.5 + 0.15 * std::sin(0.11 * y + p1 + c) + 0.1 * std::cos(0.07 * x + p2);
  return t;
}

const ResamplerSpec kBicubic4{4, KernelKind::kBicubic};
const ResamplerSpec kIdeal4{4, KernelKind::kIdeal};

}  // namespace

TEST(SynthBlurry, Endpoints) {
  Tensor hr = random_image(32, 32, 3, 1);
  EXPECT_TRUE(synth_blurry(hr, kBicubic4, 1.0).image.identical(hr));
  EXPECT_TRUE(synth_blurry(hr, kBicubic4, 0.0).image.identical(interpolate(degrade(hr, kBicubic4), kBicubic4)));
  EXPECT_THROW(synth_blurry(hr, kBicubic4, 1.5), ValueError);
  EXPECT_THROW(synth_blurry(hr, kBicubic4, -0.1), ValueError);
  EXPECT_THROW(synth_blurry(random_image(30, 32, 3, 2), kBicubic4, 0.5), ShapeError);
}

TEST(SynthBlurry, IdealMembershipForEveryAlpha) {
  Tensor hr = random_image(64, 64, 3, 3);
  const Tensor lr = degrade(hr, kIdeal4);
  for (double a : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    BlurrySample s = synth_blurry(hr, kIdeal4, a);
    EXPECT_LT(max_abs_diff(degrade(s.image, kIdeal4), lr), 1e-9) << "alpha " << a;
  }
}

TEST(SynthBlurry, ConvexCombination) {
  Tensor hr = random_image(16, 16, 3, 4);
  BlurrySample s = synth_blurry(hr, kBicubic4, 0.3);
  Tensor interp = interpolate(s.lr, kBicubic4);
  for (std::size_t i = 0; i < hr.size(); ++i) EXPECT_NEAR(s.image[i], 0.7 * interp[i] + 0.3 * hr[i], 1e-15);
}

TEST(SynthNoisy, VanishingSigmaReturnsHr) {
  Tensor hr = smooth_image(32, 32, 5);
  NoisySample s = synth_noisy(hr, 1e-12, DctLayout::standard(), 7);
  EXPECT_LT(max_abs_diff(s.image, hr), 1e-11);
  EXPECT_THROW(synth_noisy(hr, 0.0, DctLayout::standard(), 7), ValueError);
  EXPECT_THROW(synth_noisy(smooth_image(30, 32, 5), 0.1, DctLayout::standard(), 7), ShapeError);
}

TEST(SynthNoisy, PixelStdMatchesEnergyArgument) {
  Tensor hr = make_image(256, 256, 1, 0.5);
  const double sigma = 0.02;  // small enough that nothing clips
  NoisySample s = synth_noisy(hr, sigma, DctLayout::standard(), 11);
  EXPECT_EQ(s.clipped, 0u);
  double acc = 0, acc2 = 0;
  for (std::size_t i = 0; i < hr.size(); ++i) {
    const double d = s.image[i] - hr[i];
    acc += d;
    acc2 += d * d;
  }
  const double n = static_cast<double>(hr.size());
  const double std = std::sqrt(acc2 / n - (acc / n) * (acc / n));
  EXPECT_NEAR(std / (sigma * std::sqrt(15.0 / 64.0)), 1.0, 0.1);
}

TEST(SynthNoisy, EnergyOnlyInMaskedCoefficients) {
  const DctLayout layout = DctLayout::standard();
  Tensor hr = smooth_image(32, 40, 6);
  NoisySample s = synth_noisy(hr, 0.05, layout, 3, unclipped());
  Tensor diff(hr.shape());
  for (std::size_t i = 0; i < hr.size(); ++i) diff[i] = s.image[i] - hr[i];
  Tensor coef = dct2_blockwise(diff, layout);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 40; ++x)
      for (int c = 0; c < 3; ++c) {
        const bool masked = y % 8 == 7 || x % 8 == 7;
        if (!masked) {
          EXPECT_LT(std::abs(coef.at(0, y, x, c)), 1e-12);
        }
      }
}

TEST(SynthNoisy, SeedDeterminism) {
  Tensor hr = smooth_image(16, 16, 8);
  EXPECT_TRUE(synth_noisy(hr, 0.1, DctLayout::standard(), 5).image.identical(
      synth_noisy(hr, 0.1, DctLayout::standard(), 5).image));
  EXPECT_FALSE(synth_noisy(hr, 0.1, DctLayout::standard(), 5).image.identical(
      synth_noisy(hr, 0.1, DctLayout::standard(), 6).image));
}

TEST(SynthNoisy, ClipRateReported) {
  Tensor hr = make_image(16, 16, 1, 1.0);  // saturated: half the noise clips
  NoisySample s = synth_noisy(hr, 0.1, DctLayout::standard(), 9);
  EXPECT_GT(s.clip_rate, kClipWarnRate);
  for (double v : s.image.data()) EXPECT_LE(v, 1.0);
}

TEST(SynthNoisy, RestrictedNoiseIsInvisibleToIdealDegrade) {
  Tensor hr = smooth_image(64, 64, 10);
  NoisySample s = synth_noisy(hr, 0.1, DctLayout::standard(), 4, {.clip = false, .restrict_to_stopband_scale = 4});
  EXPECT_LT(max_abs_diff(degrade(s.image, kIdeal4), degrade(hr, kIdeal4)), 1e-6);
}

TEST(SynthNoisy, IdealModeMembershipAtSigmaPointOne) {
  Tensor hr = smooth_image(64, 64, 12);
  NoisySample s = synth_noisy(hr, 0.1, DctLayout::standard(), 2);
  EXPECT_GE(verify_membership(s.image, degrade(hr, kIdeal4), kIdeal4), 40.0);
}

TEST(Convexity, NoisyLineSegment) {
  Tensor hr = random_image(16, 16, 3, 13);
  NoisySample s = synth_noisy(hr, 0.1, DctLayout::standard(), 1, unclipped());
  for (double beta : {0.0, 0.3, 0.7, 1.0}) {
    double worst = 0;
    for (std::size_t i = 0; i < hr.size(); ++i) {
      const double lhs = (1 - beta) * hr[i] + beta * s.image[i];
      const double rhs = hr[i] + beta * s.noise[i];
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    EXPECT_LT(worst, 1e-12);
  }
}

TEST(VerifyMembership, SentinelAndIdealInterpolation) {
  Tensor hr = random_image(32, 32, 3, 14);
  const Tensor lr = degrade(hr, kBicubic4);
  EXPECT_GE(verify_membership(hr, lr, kBicubic4), kPsnrSentinel);
  const Tensor lri = degrade(hr, kIdeal4);
  EXPECT_GE(verify_membership(interpolate(lri, kIdeal4), lri, kIdeal4), 90.0);
  EXPECT_THROW(verify_membership(hr, make_image(7, 8, 3), kBicubic4), ShapeError);
}

TEST(ExtractPatches, FullImageAndTiling) {
  std::mt19937_64 rng(1);
  Tensor img = random_image(40, 56, 3, 15);
  auto one = extract_patches(crop(img, 0, 0, 0, 40, 40), {.size = 40, .stride = 40}, rng);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_TRUE(one[0].identical(crop(img, 0, 0, 0, 40, 40)));
  auto tiles = extract_patches(img, {.size = 16, .stride = 16}, rng);
  EXPECT_EQ(tiles.size(), static_cast<std::size_t>((40 / 16) * (56 / 16)));
  for (const Tensor& t : tiles)
    for (double v : t.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  EXPECT_THROW(extract_patches(img, {.size = 41, .stride = 8}, rng), ShapeError);
}

TEST(ExtractPatches, RandomCropsAreAligned) {
  std::mt19937_64 rng(2);
  Tensor img = make_image(48, 48, 1);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) img.at(0, y, x, 0) = (y * 48 + x) / 2304.0;
  auto crops = extract_patches(img, {.size = 16, .count = 30, .align = 4}, rng);
  ASSERT_EQ(crops.size(), 30u);
  for (const Tensor& c : crops) {
    const int origin = static_cast<int>(std::lround(c[0] * 2304.0));
    EXPECT_EQ((origin / 48) % 4, 0);
    EXPECT_EQ((origin % 48) % 4, 0);
  }
}

TEST(NmdBatch, CompositionAndLabels) {
  std::vector<Tensor> pool;
  for (int i = 0; i < 6; ++i) pool.push_back(smooth_image(32, 32, 20 + i));
  std::mt19937_64 rng(3);
  NmdBatch b = make_nmd_batch(pool, {.batch_size = 8}, kBicubic4, rng);
  EXPECT_EQ(b.images.dim(0), 8);
  int counts[3] = {0, 0, 0};
  for (ManifoldLabel l : b.labels) ++counts[static_cast<int>(l)];
  EXPECT_EQ(counts[0], 4);
  EXPECT_EQ(counts[1], 2);
  EXPECT_EQ(counts[2], 2);
  for (std::size_t i = 0; i < b.labels.size(); ++i) EXPECT_EQ(b.targets[i], label_target(b.labels[i]));
  std::mt19937_64 rng2(3);
  NmdBatch odd = make_nmd_batch(pool, {.batch_size = 6}, kBicubic4, rng2);
  int blurry = 0;
  for (ManifoldLabel l : odd.labels) blurry += l == ManifoldLabel::kBlurry;
  EXPECT_EQ(blurry, 2);  // the odd unnatural item goes to the blurry set
}

TEST(NmdBatch, AlphaOneGivesRawHr) {
  std::vector<Tensor> pool = {smooth_image(32, 32, 30)};
  std::mt19937_64 rng(4);
  NmdBatch b = make_nmd_batch(pool, {.batch_size = 4, .alpha = 1.0}, kBicubic4, rng);
  for (int i = 0; i < 4; ++i)
    if (b.labels[i] == ManifoldLabel::kBlurry) {
      EXPECT_TRUE(batch_item(b.images, i).identical(pool[0]));
    }
}

TEST(NmdBatch, DeterministicAndValidated) {
  std::vector<Tensor> pool;
  for (int i = 0; i < 4; ++i) pool.push_back(smooth_image(16, 16, 40 + i));
  std::mt19937_64 r1(9), r2(9);
  EXPECT_TRUE(make_nmd_batch(pool, {}, kBicubic4, r1).images.identical(make_nmd_batch(pool, {}, kBicubic4, r2).images));
  EXPECT_THROW(make_nmd_batch({}, {}, kBicubic4, r1), ValueError);
  EXPECT_THROW(make_nmd_batch(pool, {.batch_size = 5}, kBicubic4, r1), ValueError);
}

TEST(ExtractPatches, DihedralGroup) {
  Tensor img = random_image(6, 6, 2, 21);
  EXPECT_TRUE(dihedral(img, 0).identical(img));
  EXPECT_DOUBLE_EQ(dihedral(img, 1).at(0, 2, 0, 1), img.at(0, 2, 5, 1));
  EXPECT_DOUBLE_EQ(dihedral(img, 2).at(0, 0, 3, 0), img.at(0, 5, 3, 0));
  EXPECT_DOUBLE_EQ(dihedral(img, 4).at(0, 1, 4, 0), img.at(0, 4, 1, 0));
  for (int k = 0; k < 8; ++k) {
    // Mirrors and the transpose are involutions; the composite of all three order-4.
    Tensor t = dihedral(img, k);
    if (k == 5 || k == 6) t = dihedral(dihedral(dihedral(t, k), k), k);
    else t = dihedral(t, k);
    EXPECT_TRUE(t.identical(img)) << "element " << k;
  }
  EXPECT_THROW(dihedral(random_image(6, 5, 1, 1), 1), ShapeError);
  EXPECT_THROW(dihedral(img, 8), ValueError);
}

TEST(ExtractPatches, AugmentedCropsComeFromTheGroupOrbit) {
  std::mt19937_64 rng(3);
  Tensor img = random_image(24, 24, 1, 5);
  auto crops = extract_patches(img, {.size = 8, .count = 40, .align = 2, .augment = true}, rng);
  ASSERT_EQ(crops.size(), 40u);
  int transformed = 0;
  for (const Tensor& c : crops) {
    bool found = false, plain = false;
    for (int y = 0; y + 8 <= 24 && !found; y += 2)
      for (int x = 0; x + 8 <= 24 && !found; x += 2)
        for (int k = 0; k < 8 && !found; ++k)
          if (dihedral(crop(img, 0, y, x, 8, 8), k).identical(c)) {
            found = true;
            plain = k == 0;
          }
    EXPECT_TRUE(found);
    transformed += plain ? 0 : 1;
  }
  EXPECT_GT(transformed, 20);
}
