#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "natsr/dct.hpp"
#include "natsr/error.hpp"
#include "natsr/image.hpp"
#include "natsr/resample.hpp"

using namespace natsr;

namespace {

Tensor random_image(int h, int w, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor t = make_image(h, w, c);
  for (double& v : t.data()) v = u(rng);
  return t;
}

Tensor combine(double a, const Tensor& x, double b, const Tensor& y) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
  return out;
}

double keys_ref(double x) {
  // Keys (1981) piecewise cubic, a = -1/2, written out term by term.
  const double t = std::fabs(x);
  if (t <= 1) return 1.5 * t * t * t - 2.5 * t * t + 1;
  if (t < 2) return -0.5 * t * t * t + 2.5 * t * t - 4 * t + 2;
  return 0;
}

const ResamplerSpec kBicubic4{4, KernelKind::kBicubic};
const ResamplerSpec kIdeal4{4, KernelKind::kIdeal};

}  // namespace

TEST(MakeKernel, OnGridPhaseIsDelta) {
  PolyphaseKernel k = make_kernel({2, KernelKind::kBicubic});
  ASSERT_EQ(k.phases.size(), 2u);
  for (int j = 0; j < 5; ++j) EXPECT_EQ(k.phases[0][j], j == 2 ? 1.0 : 0.0);
}

TEST(MakeKernel, PhasesSumToOne) {
  for (int s : {2, 3, 4, 8}) {
    PolyphaseKernel k = make_kernel({s, KernelKind::kBicubic});
    for (const auto& taps : k.phases) {
      double total = 0;
      for (double t : taps) total += t;
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(MakeKernel, MatchesKeysPolynomialAtQuarterOffsets) {
  PolyphaseKernel k = make_kernel(kBicubic4);
  for (int p = 1; p < 4; ++p) {
    const double off = p / 4.0;
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(k.phases[p][j], keys_ref(off - (j - 2)), 1e-15);
  }
  EXPECT_NEAR(k.phases[2][1], -0.0625, 1e-15);
  EXPECT_NEAR(k.phases[2][2], 0.5625, 1e-15);
}

TEST(MakeKernel, InvalidScale) {
  EXPECT_THROW(make_kernel({1, KernelKind::kBicubic}), ValueError);
  EXPECT_THROW(make_kernel({9, KernelKind::kBicubic}), ValueError);
}

TEST(Lowpass, TapsSymmetricAndNormalized) {
  auto h = lowpass_taps(4);
  ASSERT_EQ(h.size(), 15u);
  double total = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    EXPECT_NEAR(h[i], h[h.size() - 1 - i], 1e-15);
    total += h[i];
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Lowpass, ConstantImageUnchanged) {
  Tensor c = make_image(16, 24, 3, 0.37);
  EXPECT_LT(max_abs_diff(lowpass(c, kBicubic4), c), 1e-14);
  EXPECT_LT(max_abs_diff(lowpass(c, kIdeal4), c), 1e-12);
}

TEST(Lowpass, Linear) {
  Tensor x = random_image(16, 16, 2, 1), y = random_image(16, 16, 2, 2);
  for (const auto& spec : {kBicubic4, kIdeal4}) {
    Tensor lhs = lowpass(combine(0.3, x, -1.7, y), spec);
    Tensor rhs = combine(0.3, lowpass(x, spec), -1.7, lowpass(y, spec));
    EXPECT_LT(max_abs_diff(lhs, rhs), 1e-10);
  }
}

TEST(Lowpass, IdealZeroesSpectrumAboveCutoff) {
  const int L = 32, s = 4;
  Tensor x = random_image(L, L, 1, 3);
  Tensor y = lowpass(x, {s, KernelKind::kIdeal});
  double worst = 0;
  for (int ky = 0; ky < L; ++ky)
    for (int kx = 0; kx < L; ++kx) {
      const int fy = std::min(ky, L - ky), fx = std::min(kx, L - kx);
      if (fy * 2 * s <= L && fx * 2 * s <= L) continue;  // at or below pi/s
      std::complex<double> acc = 0;
      for (int n = 0; n < L; ++n)
        for (int m = 0; m < L; ++m)
          acc += y.at(0, n, m, 0) * std::polar(1.0, -2 * std::numbers::pi * (ky * n + kx * m) / L);
      worst = std::max(worst, std::abs(acc));
    }
  EXPECT_LT(worst, 1e-10);
}

TEST(Lowpass, IdealIsIdempotent) {
  Tensor x = random_image(32, 24, 2, 4);
  Tensor once = lowpass(x, kIdeal4);
  EXPECT_LT(max_abs_diff(lowpass(once, kIdeal4), once), 1e-9);
}

TEST(Downsample, IdentityConstantAndErrors) {
  Tensor x = random_image(8, 12, 3, 5);
  EXPECT_TRUE(downsample(x, 1).identical(x));
  Tensor c = downsample(make_image(8, 12, 1, 0.25), 4);
  EXPECT_EQ(c.shape(), (Shape{1, 2, 3, 1}));
  for (double v : c.data()) EXPECT_EQ(v, 0.25);
  EXPECT_THROW(downsample(make_image(10, 12, 1), 4), ShapeError);
}

TEST(Downsample, PolyphaseIdentity) {
  Tensor x = random_image(6, 5, 2, 6);
  // ↑ then ↓ keeps exactly the phase-0 samples, whose tap gain is 1.
  const double gain = make_kernel(kBicubic4).phases[0][2];
  Tensor back = downsample(upsample_zero(x, 4), 4);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(back[i], x[i] * gain);
}

TEST(UpsampleZero, Laws) {
  Tensor x = random_image(5, 7, 3, 7);
  EXPECT_TRUE(upsample_zero(x, 1).identical(x));
  Tensor up = upsample_zero(x, 3);
  EXPECT_EQ(up.shape(), (Shape{1, 15, 21, 3}));
  double s0 = 0, s1 = 0;
  for (double v : x.data()) s0 += v;
  for (double v : up.data()) s1 += v;
  EXPECT_NEAR(s0, s1, 1e-12);
  EXPECT_TRUE(downsample(up, 3).identical(x));
}

TEST(Interpolate, ConstantAndOnGrid) {
  Tensor c = make_image(6, 5, 3, 0.6);
  Tensor ci = interpolate(c, kBicubic4);
  EXPECT_EQ(ci.shape(), (Shape{1, 24, 20, 3}));
  EXPECT_LT(max_abs_diff(ci, make_image(24, 20, 3, 0.6)), 1e-14);
  Tensor lr = random_image(9, 7, 3, 8);
  EXPECT_LT(max_abs_diff(downsample(interpolate(lr, kBicubic4), 4), lr), 1e-12);
}

TEST(Interpolate, MatchesPerPixelKeysOracle) {
  const int s = 4;
  Tensor lr = random_image(7, 6, 2, 9);
  Tensor out = interpolate(lr, kBicubic4);
  double worst = 0;
  for (int Y = 0; Y < 28; ++Y)
    for (int X = 0; X < 24; ++X)
      for (int c = 0; c < 2; ++c) {
        const double ty = static_cast<double>(Y) / s, tx = static_cast<double>(X) / s;
        double acc = 0;
        for (int i = static_cast<int>(std::floor(ty)) - 2; i <= static_cast<int>(std::floor(ty)) + 2; ++i)
          for (int j = static_cast<int>(std::floor(tx)) - 2; j <= static_cast<int>(std::floor(tx)) + 2; ++j)
            acc += keys_ref(ty - i) * keys_ref(tx - j) * lr.at(0, reflect_index(i, 7), reflect_index(j, 6), c);
        worst = std::max(worst, std::abs(acc - out.at(0, Y, X, c)));
      }
  EXPECT_LT(worst, 1e-10);
}

TEST(Interpolate, EqualsScaledLowpassOfZeroInsertedInterior) {
  // Away from the borders, interpolate = s² · h(lr↑).
  Tensor lr = random_image(10, 10, 1, 10);
  Tensor a = interpolate(lr, kBicubic4);
  Tensor b = lowpass(upsample_zero(lr, 4), kBicubic4);
  for (int y = 8; y < 32; ++y)
    for (int x = 8; x < 32; ++x) EXPECT_NEAR(a.at(0, y, x, 0), 16.0 * b.at(0, y, x, 0), 1e-12);
}

TEST(Degrade, ConstantAndIdealPerfectReconstruction) {
  Tensor c = make_image(16, 16, 3, 0.8);
  EXPECT_LT(max_abs_diff(degrade(c, kBicubic4), make_image(4, 4, 3, 0.8)), 1e-14);
  Tensor lr = random_image(16, 12, 3, 11);
  EXPECT_LT(max_abs_diff(degrade(interpolate(lr, kIdeal4), kIdeal4), lr), 1e-9);
  Tensor lr2 = random_image(6, 10, 1, 12);  // 2s does not divide the HR extent
  EXPECT_LT(max_abs_diff(degrade(interpolate(lr2, {2, KernelKind::kIdeal}), {2, KernelKind::kIdeal}), lr2), 1e-9);
  EXPECT_THROW(degrade(make_image(15, 16, 1), kBicubic4), ShapeError);
}

TEST(Degrade, EqualsLowpassThenDownsample) {
  Tensor hr = random_image(24, 16, 2, 13);
  for (const auto& spec : {kBicubic4, kIdeal4})
    EXPECT_LT(max_abs_diff(degrade(hr, spec), downsample(lowpass(hr, spec), 4)), 1e-12);
}

TEST(Degrade, BicubicRoundTripOnSmoothContent) {
  // Band-limited content well below the LR Nyquist frequency survives
  // degrade ∘ interpolate nearly unchanged.
  Tensor lr = make_image(32, 32, 1);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      lr.at(0, y, x, 0) = 0.5 + 0.2 * std::cos(2 * std::numbers::pi * y / 32.0) * std::cos(2 * std::numbers::pi * x / 16);
  Tensor back = degrade(interpolate(lr, kBicubic4), kBicubic4);
  double mse = 0;
  for (std::size_t i = 0; i < lr.size(); ++i) mse += (back[i] - lr[i]) * (back[i] - lr[i]);
  mse /= static_cast<double>(lr.size());
  EXPECT_GT(10 * std::log10(1.0 / mse), 45.0);
}

TEST(Resampling, ConstantIsFixedPointOfInterpolateDegrade) {
  Tensor c = make_image(32, 32, 3, 0.42);
  for (const auto& spec : {kBicubic4, kIdeal4})
    EXPECT_LT(max_abs_diff(interpolate(degrade(c, spec), spec), c), 1e-12);
}

TEST(KernelSpectrum, LowFrequencyConcentration) {
  auto spec = kernel_dct_spectrum(4);
  double total = 0, low = 0;
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      const double e = spec[u * 8 + v] * spec[u * 8 + v];
      total += e;
      if (u < 4 && v < 4) low += e;
    }
  EXPECT_GT(low / total, 0.95);
  EXPECT_NEAR(spec[0], 1.0, 1e-12);
}

TEST(Dct, ConstantBlockExcitesDcOnly) {
  const DctLayout layout = DctLayout::standard();
  Tensor c = make_image(8, 8, 1, 0.3);
  Tensor coef = dct2_blockwise(c, layout);
  EXPECT_NEAR(coef[0], 8 * 0.3, 1e-14);
  for (std::size_t i = 1; i < coef.size(); ++i) EXPECT_LT(std::abs(coef[i]), 1e-14);
}

TEST(Dct, RoundTripAndParseval) {
  const DctLayout layout = DctLayout::standard();
  Tensor x = random_image(24, 16, 3, 14);
  Tensor coef = dct2_blockwise(x, layout);
  EXPECT_LT(max_abs_diff(idct2_blockwise(coef, layout), x), 1e-10);
  for (int by = 0; by < 24; by += 8)
    for (int bx = 0; bx < 16; bx += 8)
      for (int c = 0; c < 3; ++c) {
        double e0 = 0, e1 = 0;
        for (int i = 0; i < 8; ++i)
          for (int j = 0; j < 8; ++j) {
            e0 += x.at(0, by + i, bx + j, c) * x.at(0, by + i, bx + j, c);
            e1 += coef.at(0, by + i, bx + j, c) * coef.at(0, by + i, bx + j, c);
          }
        EXPECT_NEAR(e0, e1, 1e-10);
      }
}

TEST(Dct, LayoutMaskAndErrors) {
  const DctLayout layout = DctLayout::standard();
  EXPECT_EQ(layout.mask.size(), 15u);
  EXPECT_NO_THROW(layout.validate());
  DctLayout bad = layout;
  bad.mask.emplace_back(3, 3);
  EXPECT_THROW(bad.validate(), ValueError);
  EXPECT_THROW(dct2_blockwise(make_image(12, 16, 1), layout), ShapeError);
}

TEST(Image, CropStackAndClip) {
  Tensor x = random_image(6, 6, 2, 15);
  Tensor full = crop(x, 0, 0, 0, 6, 6);
  EXPECT_TRUE(full.identical(x));
  Tensor both = stack_batch({x, x});
  EXPECT_EQ(both.dim(0), 2);
  EXPECT_TRUE(batch_item(both, 1).identical(x));
  EXPECT_THROW(crop(x, 0, 2, 2, 5, 5), ShapeError);
  Tensor y({1, 1, 1, 3}, std::vector<double>{-0.1, 0.5, 1.2});
  EXPECT_EQ(clip_unit(y), 2u);
  EXPECT_EQ(y[0], 0.0);
  EXPECT_EQ(y[2], 1.0);
}
