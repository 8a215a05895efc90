#include <gtest/gtest.h>

#include "viewforge/augment.hpp"
#include "viewforge/error.hpp"

using namespace viewforge;

TEST(PipelineText, ParsesEveryStage) {
  const ViewPipeline p = parse_pipeline(
      "random_resized_crop scale=0.2,1 ratio=0.75,1.3333 size=24\n"
      "horizontal_flip p=0.5\n"
      "color_jitter p=0.8 brightness=0.4 contrast=0.4 saturation=0.2 hue=0.1\n"
      "grayscale p=0.2\n"
      "gaussian_blur p=1 sigma=0.1,2\n"
      "solarization p=0.2 threshold=128\n"
      "gaussian_noise std=0.05\n"
      "to_float_normalize mean=0.5,0.5,0.5 std=0.25,0.25,0.25\n");
  ASSERT_EQ(p.size(), 8u);
  const auto& crop = std::get<RandomResizedCrop>(p[0]);
  EXPECT_DOUBLE_EQ(crop.scale_lo, 0.2);
  EXPECT_EQ(crop.out_size, 24);
  EXPECT_EQ(std::get<Solarization>(p[5]).threshold, 128);
  EXPECT_EQ(std::get<ToFloatNormalize>(p[7]).mean.size(), 3u);
}

TEST(PipelineText, SemicolonsCommentsAndDefaults) {
  const ViewPipeline p = parse_pipeline("# comment\ngrayscale; horizontal_flip p=1  # trailing\n\n");
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(std::get<Grayscale>(p[0]), Grayscale{});
  EXPECT_DOUBLE_EQ(std::get<HorizontalFlip>(p[1]).p, 1.0);
}

TEST(PipelineText, RoundTrip) {
  const ViewPipeline p = preset_pipeline("ssl_default", 40);
  EXPECT_EQ(parse_pipeline(to_text(p)), p);
}

TEST(PipelineText, Errors) {
  for (const char* bad : {"blurry p=1", "grayscale q=1", "grayscale p", "grayscale p=abc",
                          "random_resized_crop scale=0,0.5", "random_resized_crop scale=1,2,3", "solarization threshold=1.5", "grayscale p=2",
                          "to_float_normalize mean=0 std=1; grayscale"}) {
    try {
      parse_pipeline(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::InvalidParam) << bad;
    }
  }
}
