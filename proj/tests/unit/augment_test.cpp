#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles/conv_oracle.hpp"
#include "support/test_support.hpp"
#include "viewforge/augment.hpp"
#include "viewforge/error.hpp"

using namespace viewforge;
using testing_support::constant_image;
using testing_support::random_image;

namespace {

RngStream stream(std::uint64_t seed) { return RngStream(RngKey{seed, 0, 0, 0}); }

ImageRecord pixel_image(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  ImageRecord img(1, 1, 3);
  img.pixels = {r, g, b};
  return img;
}

}  // namespace

TEST(RandomResizedCrop, IdentityCrop) {
  std::mt19937_64 gen(1);
  const ImageRecord img = random_image(32, 32, 3, gen);
  RngStream rng = stream(1);
  const ImageRecord out = random_resized_crop(img, RandomResizedCrop{1.0, 1.0, 1.0, 1.0, 32}, rng);
  EXPECT_EQ(out, img);
}

TEST(RandomResizedCrop, ConstantInConstantOut) {
  const ImageRecord img = constant_image(40, 30, 3, 91);
  RngStream rng = stream(2);
  const ImageRecord out = random_resized_crop(img, RandomResizedCrop{0.08, 1.0, 0.75, 4.0 / 3.0, 13}, rng);
  ASSERT_EQ(out.height, 13);
  ASSERT_EQ(out.width, 13);
  for (auto p : out.pixels) EXPECT_EQ(p, 91);
}

TEST(RandomResizedCrop, FixedSeedIsReproducible) {
  std::mt19937_64 gen(3);
  const ImageRecord img = random_image(64, 64, 3, gen);
  const RandomResizedCrop st{0.2, 1.0, 0.75, 4.0 / 3.0, 24};
  RngStream a = stream(9), b = stream(9);
  EXPECT_EQ(random_resized_crop(img, st, a), random_resized_crop(img, st, b));
}

TEST(SampleCropBox, RespectsScaleAndBounds) {
  RngStream rng = stream(4);
  for (int i = 0; i < 2000; ++i) {
    const CropBox b = sample_crop_box(50, 80, 0.2, 0.6, 0.75, 4.0 / 3.0, rng);
    ASSERT_GE(b.top, 0);
    ASSERT_GE(b.left, 0);
    ASSERT_LE(b.top + b.height, 50);
    ASSERT_LE(b.left + b.width, 80);
    ASSERT_GE(b.height, 1);
    ASSERT_GE(b.width, 1);
  }
}

TEST(SampleCropBox, ImpossibleRatioFallsBackToCenter) {
  RngStream rng = stream(5);
  const CropBox b = sample_crop_box(10, 100, 0.9, 1.0, 0.1, 0.1, rng);
  EXPECT_LE(b.top + b.height, 10);
  EXPECT_LE(b.left + b.width, 100);
  EXPECT_NEAR(b.left + b.width / 2.0, 50.0, 1.0);
}

TEST(Grayscale, FixedPointAndRedLuma) {
  RngStream rng = stream(6);
  EXPECT_EQ(grayscale(pixel_image(100, 100, 100), Grayscale{1.0}, rng), pixel_image(100, 100, 100));
  EXPECT_EQ(grayscale(pixel_image(255, 0, 0), Grayscale{1.0}, rng), pixel_image(76, 76, 76));
}

TEST(Grayscale, ProbabilityZeroIsIdentity) {
  std::mt19937_64 gen(7);
  const ImageRecord img = random_image(9, 9, 3, gen);
  RngStream rng = stream(7);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(grayscale(img, Grayscale{0.0}, rng), img);
}

TEST(Grayscale, IdempotentAndNeedsThreeChannels) {
  std::mt19937_64 gen(8);
  const ImageRecord img = random_image(9, 9, 3, gen);
  const ImageRecord once = luma_gray(img);
  EXPECT_EQ(luma_gray(once), once);
  RngStream rng = stream(8);
  EXPECT_THROW(grayscale(random_image(4, 4, 1, gen), Grayscale{1.0}, rng), Error);
}

TEST(Solarize, ThresholdBehaviour) {
  RngStream rng = stream(9);
  ImageRecord img(1, 2, 1);
  img.pixels = {200, 100};
  const ImageRecord out = solarize(img, Solarization{1.0, 128}, rng);
  EXPECT_EQ(out.pixels[0], 55);
  EXPECT_EQ(out.pixels[1], 100);
}

TEST(Solarize, ZeroThresholdIsInvolution) {
  std::mt19937_64 gen(10);
  const ImageRecord img = random_image(8, 8, 3, gen);
  const ImageRecord inv = solarize_all(img, 0);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) EXPECT_EQ(inv.pixels[i], 255 - img.pixels[i]);
  EXPECT_EQ(solarize_all(inv, 0), img);
}

TEST(ColorJitter, ZeroDeltasAreIdentity) {
  std::mt19937_64 gen(11);
  const ImageRecord img = random_image(12, 12, 3, gen);
  RngStream rng = stream(11);
  EXPECT_EQ(color_jitter(img, ColorJitter{1.0, 0.0, 0.0, 0.0, 0.0}, rng), img);
}

TEST(ColorJitter, BrightnessIsScaleAndClamp) {
  std::mt19937_64 gen(12);
  const ImageRecord img = random_image(6, 6, 3, gen);
  const ImageRecord out = adjust_brightness(img, 1.3);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) EXPECT_EQ(out.pixels[i], clamp_round_u8(1.3 * img.pixels[i]));
}

TEST(ColorJitter, BrightnessOnlyUsesDrawnFactorWithinRange) {
  const ImageRecord img = constant_image(4, 4, 3, 100);
  for (std::uint64_t s = 0; s < 50; ++s) {
    RngStream rng = stream(s);
    const ImageRecord out = color_jitter(img, ColorJitter{1.0, 0.4, 0.0, 0.0, 0.0}, rng);
    EXPECT_GE(out.pixels[0], 60);
    EXPECT_LE(out.pixels[0], 140);
    for (auto p : out.pixels) EXPECT_EQ(p, out.pixels[0]);
  }
}

TEST(ColorJitter, Reproducible) {
  std::mt19937_64 gen(13);
  const ImageRecord img = random_image(16, 16, 3, gen);
  RngStream a = stream(13), b = stream(13);
  EXPECT_EQ(color_jitter(img, ColorJitter{}, a), color_jitter(img, ColorJitter{}, b));
}

TEST(ColorJitter, HueFullTurnIsIdentityWithinRounding) {
  std::mt19937_64 gen(14);
  const ImageRecord img = random_image(8, 8, 3, gen);
  const ImageRecord out = adjust_hue(img, 1.0);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) EXPECT_NEAR(out.pixels[i], img.pixels[i], 1);
}

TEST(ColorJitter, SaturationZeroGivesGray) {
  const ImageRecord out = adjust_saturation(pixel_image(200, 50, 10), 0.0);
  EXPECT_EQ(out.pixels[0], out.pixels[1]);
  EXPECT_EQ(out.pixels[1], out.pixels[2]);
}

TEST(GaussianBlur, ConstantStaysConstant) {
  const ImageRecord img = constant_image(20, 20, 3, 140);
  EXPECT_EQ(blur_with_sigma(img, 1.7), img);
}

TEST(GaussianBlur, ImpulseResponseIsSymmetric) {
  ImageRecord img(21, 21, 1);
  img.at(10, 10, 0) = 255;
  const ImageRecord out = blur_with_sigma(img, 1.0);
  for (int d = 1; d <= 4; ++d) {
    EXPECT_EQ(out.at(10, 10 + d, 0), out.at(10, 10 - d, 0));
    EXPECT_EQ(out.at(10 + d, 10, 0), out.at(10 - d, 10, 0));
    EXPECT_EQ(out.at(10 + d, 10 + d, 0), out.at(10 - d, 10 - d, 0));
  }
  EXPECT_GT(out.at(10, 10, 0), out.at(10, 11, 0));
}

TEST(GaussianBlur, MatchesDenseConvolutionOracle) {
  std::mt19937_64 gen(15);
  const ImageRecord img = random_image(32, 29, 3, gen);
  const ImageRecord fast = blur_with_sigma(img, 2.0);
  const ImageRecord slow = oracle::dense_gaussian_blur(img, 2.0);
  int worst = 0;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) worst = std::max(worst, std::abs(fast.pixels[i] - slow.pixels[i]));
  EXPECT_LE(worst, 1);
}

TEST(GaussianBlur, ReflectIndex) {
  EXPECT_EQ(reflect_index(-1, 5), 1);
  EXPECT_EQ(reflect_index(-2, 5), 2);
  EXPECT_EQ(reflect_index(5, 5), 3);
  EXPECT_EQ(reflect_index(6, 5), 2);
  EXPECT_EQ(reflect_index(3, 5), 3);
  EXPECT_EQ(reflect_index(-7, 3), 1);
  EXPECT_EQ(reflect_index(4, 1), 0);
  for (int i = -20; i < 20; ++i) EXPECT_EQ(reflect_index(i, 4), oracle::mirror(i, 4)) << i;
}

TEST(GaussianNoise, ZeroStdIsIdentity) {
  std::mt19937_64 gen(16);
  const ImageRecord img = random_image(10, 10, 3, gen);
  RngStream rng = stream(16);
  EXPECT_EQ(gaussian_noise(img, GaussianNoise{0.0}, rng), img);
}

TEST(GaussianNoise, SampleStdMatches) {
  const ImageRecord img = constant_image(64, 64, 3, 128);
  RngStream rng = stream(17);
  const ImageRecord out = gaussian_noise(img, GaussianNoise{0.1}, rng);
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double d = (out.pixels[i] - img.pixels[i]) / 255.0;
    sum += d;
    sq += d * d;
  }
  const double n = static_cast<double>(out.pixels.size());
  const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
  EXPECT_NEAR(sd, 0.1, 0.01);
}

TEST(ToFloatNormalize, Formula) {
  const ImageRecord img = pixel_image(0, 51, 255);
  const FloatImage f = to_float_normalize(img, ToFloatNormalize{{0.5, 0.2, 0.0}, {0.5, 0.1, 1.0}});
  ASSERT_EQ(f.values.size(), 3u);
  EXPECT_FLOAT_EQ(f.values[0], -1.0f);
  EXPECT_FLOAT_EQ(f.values[1], 0.0f);
  EXPECT_FLOAT_EQ(f.values[2], 1.0f);
}

TEST(Stages, ProbabilityHonoured) {
  std::mt19937_64 gen(18);
  const ImageRecord img = random_image(2, 2, 3, gen);
  int flips = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    RngStream rng(RngKey{s, 1, 2, 3});
    flips += horizontal_flip(img, HorizontalFlip{0.2}, rng) != img;
  }
  EXPECT_NEAR(flips / 10000.0, 0.2, 0.02);
}

TEST(Stages, ExtremeInputsStayInRange) {
  const ViewPipeline full = preset_pipeline("ssl_default", 16);
  for (std::uint8_t v : {std::uint8_t{0}, std::uint8_t{255}}) {
    const ImageRecord img = constant_image(20, 20, 3, v);
    for (std::uint64_t s = 0; s < 30; ++s) {
      const View out = apply_pipeline(img, full, RngStream(RngKey{s, 0, 0, 0}));
      ASSERT_TRUE(std::holds_alternative<ImageRecord>(out));
      EXPECT_EQ(std::get<ImageRecord>(out).pixels.size(), 16u * 16u * 3u);
    }
  }
  const ImageRecord img = constant_image(8, 8, 3, 255);
  const FloatImage f = to_float_normalize(img, ToFloatNormalize{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}});
  for (float x : f.values) EXPECT_TRUE(x >= 0.0f && x <= 1.0f);
}

TEST(Stages, ValidationRejectsBadParameters) {
  EXPECT_THROW(validate_stage(Grayscale{1.5}), Error);
  EXPECT_THROW(validate_stage(Solarization{0.2, 256}), Error);
  EXPECT_THROW(validate_stage(RandomResizedCrop{0.9, 0.1, 1, 1, 8}), Error);
  EXPECT_THROW(validate_stage(GaussianBlur{1.0, 2.0, 1.0}), Error);
  EXPECT_THROW(validate_stage(GaussianNoise{-0.1}), Error);
  EXPECT_NO_THROW(validate_stage(ColorJitter{}));
}

TEST(ApplyPipeline, GrayscaleZeroIsIdentity) {
  std::mt19937_64 gen(19);
  const ImageRecord img = random_image(7, 9, 3, gen);
  const View v = apply_pipeline(img, ViewPipeline{Grayscale{0.0}}, stream(19));
  EXPECT_EQ(std::get<ImageRecord>(v), img);
}

TEST(ApplyPipeline, DefaultBranchRuns) {
  std::mt19937_64 gen(20);
  const ImageRecord img = random_image(48, 40, 3, gen);
  const ViewPipeline p{RandomResizedCrop{0.08, 1.0, 0.75, 4.0 / 3.0, 32}, HorizontalFlip{0.5}, ColorJitter{0.8},
                       Grayscale{0.2}, GaussianBlur{1.0}, Solarization{0.2}};
  const View v = apply_pipeline(img, p, stream(20));
  EXPECT_EQ(std::get<ImageRecord>(v).height, 32);
}

TEST(ApplyPipeline, AppendingStagesKeepsEarlierDraws) {
  std::mt19937_64 gen(21);
  const ImageRecord img = random_image(40, 40, 3, gen);
  const ViewPipeline ab{RandomResizedCrop{0.2, 1.0, 0.75, 4.0 / 3.0, 20}, ColorJitter{1.0}};
  ViewPipeline abc = ab;
  abc.push_back(Solarization{1.0, 256 - 1});
  ViewPipeline a{ab[0]};
  for (std::uint64_t s = 0; s < 10; ++s) {
    const RngStream rng(RngKey{s, 0, 0, 0});
    const ImageRecord out_ab = std::get<ImageRecord>(apply_pipeline(img, ab, rng));
    const ImageRecord out_abc = std::get<ImageRecord>(apply_pipeline(img, abc, rng));
    EXPECT_EQ(solarize_all(out_ab, 255), out_abc);
    EXPECT_EQ(std::get<ImageRecord>(apply_pipeline(img, a, rng)).pixels.size(), out_ab.pixels.size());
  }
}

TEST(ApplyPipeline, Rejections) {
  std::mt19937_64 gen(22);
  const ImageRecord img = random_image(4, 4, 3, gen);
  EXPECT_THROW(apply_pipeline(img, ViewPipeline{}, stream(0)), Error);
  EXPECT_THROW(apply_pipeline(img, ViewPipeline{ToFloatNormalize{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}}, Grayscale{}}, stream(0)), Error);
  const View f = apply_pipeline(img, ViewPipeline{Grayscale{0.0}, ToFloatNormalize{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}}}, stream(0));
  EXPECT_TRUE(std::holds_alternative<FloatImage>(f));
}

TEST(Presets, OrderAndCumulativeStages) {
  EXPECT_EQ(bench_preset_names(), (std::vector<std::string>{"crops", "+blur", "+gray", "+sol", "+jitter"}));
  std::size_t prev = 0;
  for (const auto& n : bench_preset_names()) {
    const auto p = preset_pipeline(n, 32);
    EXPECT_EQ(p.size(), prev + 1) << n;
    prev = p.size();
  }
  EXPECT_THROW(preset_pipeline("nope", 32), Error);
}

TEST(Presets, WithOutputSize) {
  const ViewPipeline p = with_output_size(preset_pipeline("+jitter", 32), 48);
  EXPECT_EQ(std::get<RandomResizedCrop>(p[0]).out_size, 48);
}
