#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "viewforge/image.hpp"
#include "viewforge/rng.hpp"

namespace viewforge {

// Defaults follow common SSL practice; every field is configurable.
struct RandomResizedCrop {
  double scale_lo = 0.08;
  double scale_hi = 1.0;
  double ratio_lo = 3.0 / 4.0;
  double ratio_hi = 4.0 / 3.0;
  int out_size = 32;
  bool operator==(const RandomResizedCrop&) const = default;
};

struct HorizontalFlip {
  double p = 0.5;
  bool operator==(const HorizontalFlip&) const = default;
};

struct Grayscale {
  double p = 0.2;
  bool operator==(const Grayscale&) const = default;
};

struct ColorJitter {
  double p = 0.8;
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.2;
  double hue = 0.1;  // in turns, <= 0.5
  bool operator==(const ColorJitter&) const = default;
};

struct Solarization {
  double p = 0.2;
  int threshold = 128;
  bool operator==(const Solarization&) const = default;
};

struct GaussianBlur {
  double p = 1.0;
  double sigma_lo = 0.1;
  double sigma_hi = 2.0;
  bool operator==(const GaussianBlur&) const = default;
};

// std is on the [0, 1] intensity scale.
struct GaussianNoise {
  double std = 0.1;
  bool operator==(const GaussianNoise&) const = default;
};

// Terminal stage: converts to float, (v / 255 - mean[c]) / std[c].
struct ToFloatNormalize {
  std::vector<double> mean;
  std::vector<double> std;
  bool operator==(const ToFloatNormalize&) const = default;
};

using AugmentationStage = std::variant<RandomResizedCrop, HorizontalFlip, Grayscale, ColorJitter, Solarization,
                                       GaussianBlur, GaussianNoise, ToFloatNormalize>;
using ViewPipeline = std::vector<AugmentationStage>;
using View = std::variant<ImageRecord, FloatImage>;

// Throws InvalidParam when a probability, range or threshold is out of bounds.
void validate_stage(const AugmentationStage& stage);
std::string_view stage_name(const AugmentationStage& stage);

// Draws a crop window with area fraction in [scale_lo, scale_hi] and a
// log-uniform aspect ratio; falls back to a ratio-clamped center crop after
// 10 rejected attempts.
CropBox sample_crop_box(int height, int width, double scale_lo, double scale_hi, double ratio_lo, double ratio_hi,
                        RngStream& rng);

ImageRecord random_resized_crop(const ImageRecord& img, const RandomResizedCrop& stage, RngStream& rng);
ImageRecord horizontal_flip(const ImageRecord& img, const HorizontalFlip& stage, RngStream& rng);
ImageRecord grayscale(const ImageRecord& img, const Grayscale& stage, RngStream& rng);
ImageRecord solarize(const ImageRecord& img, const Solarization& stage, RngStream& rng);
ImageRecord color_jitter(const ImageRecord& img, const ColorJitter& stage, RngStream& rng);
ImageRecord gaussian_blur(const ImageRecord& img, const GaussianBlur& stage, RngStream& rng);
ImageRecord gaussian_noise(const ImageRecord& img, const GaussianNoise& stage, RngStream& rng);
FloatImage to_float_normalize(const ImageRecord& img, const ToFloatNormalize& stage);

// Deterministic pieces the stages are built from.
ImageRecord luma_gray(const ImageRecord& img);
ImageRecord solarize_all(const ImageRecord& img, int threshold);
ImageRecord blur_with_sigma(const ImageRecord& img, double sigma);
ImageRecord adjust_brightness(const ImageRecord& img, double factor);
ImageRecord adjust_contrast(const ImageRecord& img, double factor);
ImageRecord adjust_saturation(const ImageRecord& img, double factor);
ImageRecord adjust_hue(const ImageRecord& img, double shift_turns);

// Maps an index onto [0, n) by mirror reflection without edge repetition.
int reflect_index(int i, int n) noexcept;

// Applies one non-terminal stage. ToFloatNormalize is rejected here.
ImageRecord apply_stage(const ImageRecord& img, const AugmentationStage& stage, RngStream& rng);

// Stage i draws from rng.substream(i), so appending stages never changes the
// draws of earlier ones. Throws InvalidParam on an empty pipeline or a
// ToFloatNormalize stage that is not last.
View apply_pipeline(const ImageRecord& img, const ViewPipeline& pipeline, const RngStream& rng);

// Replaces out_size of every RandomResizedCrop stage.
ViewPipeline with_output_size(ViewPipeline pipeline, int out_size);

// Plain-text form: one stage per line (or ';'-separated), "name key=value ...";
// grammar in docs/pipeline_grammar.md. Throws ConfigError.
ViewPipeline parse_pipeline(std::string_view text);
std::string to_text(const ViewPipeline& pipeline);

// Named pipelines: "none", "crops", "+blur", "+gray", "+sol", "+jitter"
// (each adds one stage to the previous), and "ssl_default".
ViewPipeline preset_pipeline(std::string_view name, int out_size);
const std::vector<std::string>& bench_preset_names();

}  // namespace viewforge
