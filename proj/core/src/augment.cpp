#include "viewforge/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "viewforge/error.hpp"

namespace viewforge {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_probability(double p, std::string_view what) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::InvalidParam, std::string(what) + ": probability must lie in [0, 1]");
}

void check_range(double lo, double hi, std::string_view what) {
  if (!(lo <= hi)) fail(ErrorCode::InvalidParam, std::string(what) + ": range must satisfy lo <= hi");
}

void require_rgb(const ImageRecord& img, std::string_view what) {
  if (img.channels != 3) {
    fail(ErrorCode::ShapeMismatch, std::string(what) + " needs a 3-channel image, got " + std::to_string(img.channels));
  }
}

void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
  const float maxc = std::max({r, g, b});
  const float minc = std::min({r, g, b});
  v = maxc;
  if (maxc == minc) {
    h = 0.0f;
    s = 0.0f;
    return;
  }
  const float span = maxc - minc;
  s = span / maxc;
  const float rc = (maxc - r) / span;
  const float gc = (maxc - g) / span;
  const float bc = (maxc - b) / span;
  if (r == maxc) {
    h = bc - gc;
  } else if (g == maxc) {
    h = 2.0f + rc - bc;
  } else {
    h = 4.0f + gc - rc;
  }
  h = h / 6.0f;
  h -= std::floor(h);
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
  if (s == 0.0f) {
    r = g = b = v;
    return;
  }
  const float h6 = h * 6.0f;
  const int i = static_cast<int>(std::floor(h6));
  const float f = h6 - static_cast<float>(i);
  const float p = v * (1.0f - s);
  const float q = v * (1.0f - s * f);
  const float t = v * (1.0f - s * (1.0f - f));
  switch (((i % 6) + 6) % 6) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

double mean_luma(const ImageRecord& img) {
  double sum = 0.0;
  const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* px = img.pixels.data() + 3 * i;
    sum += 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
  }
  return sum / static_cast<double>(n);
}

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<float> k(2 * radius + 1);
  double total = 0.0;
  std::vector<double> w(k.size());
  for (int i = -radius; i <= radius; ++i) {
    w[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    total += w[i + radius];
  }
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = static_cast<float>(w[i] / total);
  return k;
}

}  // namespace

int reflect_index(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

void validate_stage(const AugmentationStage& stage) {
  std::visit(Overloaded{
                 [](const RandomResizedCrop& s) {
                   check_range(s.scale_lo, s.scale_hi, "random_resized_crop.scale");
                   check_range(s.ratio_lo, s.ratio_hi, "random_resized_crop.ratio");
                   if (!(s.scale_lo > 0.0 && s.scale_hi <= 1.0)) {
                     fail(ErrorCode::InvalidParam, "random_resized_crop.scale must lie in (0, 1]");
                   }
                   if (!(s.ratio_lo > 0.0)) fail(ErrorCode::InvalidParam, "random_resized_crop.ratio must be positive");
                   if (s.out_size < 1) fail(ErrorCode::InvalidParam, "random_resized_crop.size must be >= 1");
                 },
                 [](const HorizontalFlip& s) { check_probability(s.p, "horizontal_flip"); },
                 [](const Grayscale& s) { check_probability(s.p, "grayscale"); },
                 [](const ColorJitter& s) {
                   check_probability(s.p, "color_jitter");
                   if (!(s.brightness >= 0 && s.contrast >= 0 && s.saturation >= 0 && s.hue >= 0 && s.hue <= 0.5)) {
                     fail(ErrorCode::InvalidParam, "color_jitter deltas must be >= 0 and hue <= 0.5");
                   }
                 },
                 [](const Solarization& s) {
                   check_probability(s.p, "solarization");
                   if (s.threshold < 0 || s.threshold > 255) {
                     fail(ErrorCode::InvalidParam, "solarization.threshold must lie in [0, 255]");
                   }
                 },
                 [](const GaussianBlur& s) {
                   check_probability(s.p, "gaussian_blur");
                   check_range(s.sigma_lo, s.sigma_hi, "gaussian_blur.sigma");
                   if (!(s.sigma_lo >= 0.0)) fail(ErrorCode::InvalidParam, "gaussian_blur.sigma must be >= 0");
                 },
                 [](const GaussianNoise& s) {
                   if (!(s.std >= 0.0)) fail(ErrorCode::InvalidParam, "gaussian_noise.std must be >= 0");
                 },
                 [](const ToFloatNormalize& s) {
                   if (s.mean.size() != s.std.size()) {
                     fail(ErrorCode::InvalidParam, "to_float_normalize mean/std lengths differ");
                   }
                   for (double d : s.std) {
                     if (!(d > 0.0)) fail(ErrorCode::InvalidParam, "to_float_normalize.std must be positive");
                   }
                 },
             },
             stage);
}

std::string_view stage_name(const AugmentationStage& stage) {
  return std::visit(Overloaded{
                        [](const RandomResizedCrop&) { return std::string_view("random_resized_crop"); },
                        [](const HorizontalFlip&) { return std::string_view("horizontal_flip"); },
                        [](const Grayscale&) { return std::string_view("grayscale"); },
                        [](const ColorJitter&) { return std::string_view("color_jitter"); },
                        [](const Solarization&) { return std::string_view("solarization"); },
                        [](const GaussianBlur&) { return std::string_view("gaussian_blur"); },
                        [](const GaussianNoise&) { return std::string_view("gaussian_noise"); },
                        [](const ToFloatNormalize&) { return std::string_view("to_float_normalize"); },
                    },
                    stage);
}

CropBox sample_crop_box(int height, int width, double scale_lo, double scale_hi, double ratio_lo, double ratio_hi,
                        RngStream& rng) {
  const double area = static_cast<double>(height) * width;
  const double log_lo = std::log(ratio_lo);
  const double log_hi = std::log(ratio_hi);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target = area * rng.uniform(scale_lo, scale_hi);
    const double aspect = std::exp(rng.uniform(log_lo, log_hi));
    const int w = static_cast<int>(std::lround(std::sqrt(target * aspect)));
    const int h = static_cast<int>(std::lround(std::sqrt(target / aspect)));
    if (w > 0 && h > 0 && w <= width && h <= height) {
      const int top = static_cast<int>(rng.uniform_int(0, height - h));
      const int left = static_cast<int>(rng.uniform_int(0, width - w));
      return {top, left, h, w};
    }
  }
  const double in_ratio = static_cast<double>(width) / height;
  int w = width;
  int h = height;
  if (in_ratio < ratio_lo) {
    h = std::clamp(static_cast<int>(std::lround(w / ratio_lo)), 1, height);
  } else if (in_ratio > ratio_hi) {
    w = std::clamp(static_cast<int>(std::lround(h * ratio_hi)), 1, width);
  }
  return {(height - h) / 2, (width - w) / 2, h, w};
}

ImageRecord random_resized_crop(const ImageRecord& img, const RandomResizedCrop& stage, RngStream& rng) {
  validate_stage(stage);
  if (!img.valid()) fail(ErrorCode::ShapeMismatch, "random_resized_crop on malformed image");
  const CropBox box =
      sample_crop_box(img.height, img.width, stage.scale_lo, stage.scale_hi, stage.ratio_lo, stage.ratio_hi, rng);
  return resize_bilinear(img, box, stage.out_size, stage.out_size);
}

ImageRecord horizontal_flip(const ImageRecord& img, const HorizontalFlip& stage, RngStream& rng) {
  validate_stage(stage);
  if (!rng.bernoulli(stage.p)) return img;
  ImageRecord out = img;
  const int c = img.channels;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int ch = 0; ch < c; ++ch) out.at(y, x, ch) = img.at(y, img.width - 1 - x, ch);
    }
  }
  return out;
}

ImageRecord luma_gray(const ImageRecord& img) {
  require_rgb(img, "grayscale");
  ImageRecord out = img;
  const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* px = img.pixels.data() + 3 * i;
    // Integer form of round(0.299 R + 0.587 G + 0.114 B); exact, so gray is a fixed point.
    const auto y = static_cast<std::uint8_t>((299u * px[0] + 587u * px[1] + 114u * px[2] + 500u) / 1000u);
    out.pixels[3 * i] = out.pixels[3 * i + 1] = out.pixels[3 * i + 2] = y;
  }
  return out;
}

ImageRecord grayscale(const ImageRecord& img, const Grayscale& stage, RngStream& rng) {
  validate_stage(stage);
  require_rgb(img, "grayscale");
  if (!rng.bernoulli(stage.p)) return img;
  return luma_gray(img);
}

ImageRecord solarize_all(const ImageRecord& img, int threshold) {
  ImageRecord out = img;
  for (auto& v : out.pixels) {
    if (v >= threshold) v = static_cast<std::uint8_t>(255 - v);
  }
  return out;
}

ImageRecord solarize(const ImageRecord& img, const Solarization& stage, RngStream& rng) {
  validate_stage(stage);
  if (!rng.bernoulli(stage.p)) return img;
  return solarize_all(img, stage.threshold);
}

ImageRecord adjust_brightness(const ImageRecord& img, double factor) {
  ImageRecord out = img;
  for (auto& v : out.pixels) v = clamp_round_u8(factor * v);
  return out;
}

ImageRecord adjust_contrast(const ImageRecord& img, double factor) {
  require_rgb(img, "contrast");
  const double mean = mean_luma(img);
  ImageRecord out = img;
  for (auto& v : out.pixels) v = clamp_round_u8(factor * v + (1.0 - factor) * mean);
  return out;
}

ImageRecord adjust_saturation(const ImageRecord& img, double factor) {
  require_rgb(img, "saturation");
  ImageRecord out = img;
  const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint8_t* px = out.pixels.data() + 3 * i;
    const double gray = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    for (int c = 0; c < 3; ++c) px[c] = clamp_round_u8(factor * px[c] + (1.0 - factor) * gray);
  }
  return out;
}

ImageRecord adjust_hue(const ImageRecord& img, double shift_turns) {
  require_rgb(img, "hue");
  ImageRecord out = img;
  const std::size_t n = static_cast<std::size_t>(img.height) * img.width;
  const auto shift = static_cast<float>(shift_turns);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint8_t* px = out.pixels.data() + 3 * i;
    float h, s, v;
    rgb_to_hsv(px[0] / 255.0f, px[1] / 255.0f, px[2] / 255.0f, h, s, v);
    h += shift;
    h -= std::floor(h);
    float r, g, b;
    hsv_to_rgb(h, s, v, r, g, b);
    px[0] = clamp_round_u8(r * 255.0);
    px[1] = clamp_round_u8(g * 255.0);
    px[2] = clamp_round_u8(b * 255.0);
  }
  return out;
}

ImageRecord color_jitter(const ImageRecord& img, const ColorJitter& stage, RngStream& rng) {
  validate_stage(stage);
  require_rgb(img, "color_jitter");
  if (!rng.bernoulli(stage.p)) return img;

  // Fixed draw count per application: order first, then all four factors.
  std::array<int, 4> order = {0, 1, 2, 3};
  for (int i = 3; i > 0; --i) std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  const double brightness = rng.uniform(std::max(0.0, 1.0 - stage.brightness), 1.0 + stage.brightness);
  const double contrast = rng.uniform(std::max(0.0, 1.0 - stage.contrast), 1.0 + stage.contrast);
  const double saturation = rng.uniform(std::max(0.0, 1.0 - stage.saturation), 1.0 + stage.saturation);
  const double hue = rng.uniform(-stage.hue, stage.hue);

  ImageRecord out = img;
  for (int op : order) {
    switch (op) {
      case 0:
        if (stage.brightness > 0) out = adjust_brightness(out, brightness);
        break;
      case 1:
        if (stage.contrast > 0) out = adjust_contrast(out, contrast);
        break;
      case 2:
        if (stage.saturation > 0) out = adjust_saturation(out, saturation);
        break;
      default:
        if (stage.hue > 0) out = adjust_hue(out, hue);
        break;
    }
  }
  return out;
}

ImageRecord blur_with_sigma(const ImageRecord& img, double sigma) {
  if (!img.valid()) fail(ErrorCode::ShapeMismatch, "gaussian_blur on malformed image");
  if (!(sigma > 0.0)) return img;
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int h = img.height;
  const int w = img.width;
  const int c = img.channels;

  std::vector<int> xs(static_cast<std::size_t>(w) + 2 * radius);
  for (int i = 0; i < static_cast<int>(xs.size()); ++i) xs[i] = reflect_index(i - radius, w);
  std::vector<int> ys(static_cast<std::size_t>(h) + 2 * radius);
  for (int i = 0; i < static_cast<int>(ys.size()); ++i) ys[i] = reflect_index(i - radius, h);

  std::vector<float> horizontal(img.pixels.size());
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row = img.pixels.data() + static_cast<std::size_t>(y) * w * c;
    float* dst = horizontal.data() + static_cast<std::size_t>(y) * w * c;
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        float acc = 0.0f;
        for (int k = 0; k <= 2 * radius; ++k) acc += kernel[k] * row[xs[x + k] * c + ch];
        dst[x * c + ch] = acc;
      }
    }
  }

  ImageRecord out(h, w, c, img.label);
  const std::size_t stride = static_cast<std::size_t>(w) * c;
  std::vector<float> acc(stride);
  for (int y = 0; y < h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0f);
    for (int k = 0; k <= 2 * radius; ++k) {
      const float* src = horizontal.data() + static_cast<std::size_t>(ys[y + k]) * stride;
      const float wk = kernel[k];
      for (std::size_t i = 0; i < stride; ++i) acc[i] += wk * src[i];
    }
    std::uint8_t* dst = out.pixels.data() + static_cast<std::size_t>(y) * stride;
    for (std::size_t i = 0; i < stride; ++i) dst[i] = clamp_round_u8(acc[i]);
  }
  return out;
}

ImageRecord gaussian_blur(const ImageRecord& img, const GaussianBlur& stage, RngStream& rng) {
  validate_stage(stage);
  if (!rng.bernoulli(stage.p)) return img;
  return blur_with_sigma(img, rng.uniform(stage.sigma_lo, stage.sigma_hi));
}

ImageRecord gaussian_noise(const ImageRecord& img, const GaussianNoise& stage, RngStream& rng) {
  validate_stage(stage);
  if (stage.std == 0.0) return img;
  ImageRecord out = img;
  for (auto& v : out.pixels) {
    const double unit = v / 255.0 + stage.std * rng.normal();
    v = clamp_round_u8(std::clamp(unit, 0.0, 1.0) * 255.0);
  }
  return out;
}

FloatImage to_float_normalize(const ImageRecord& img, const ToFloatNormalize& stage) {
  validate_stage(stage);
  if (!stage.mean.empty() && static_cast<int>(stage.mean.size()) != img.channels) {
    fail(ErrorCode::ShapeMismatch, "to_float_normalize has " + std::to_string(stage.mean.size()) +
                                       " channel statistics for a " + std::to_string(img.channels) + "-channel image");
  }
  FloatImage out{img.height, img.width, img.channels, std::vector<float>(img.pixels.size())};
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    double v = img.pixels[i] / 255.0;
    if (!stage.mean.empty()) {
      const std::size_t c = i % static_cast<std::size_t>(img.channels);
      v = (v - stage.mean[c]) / stage.std[c];
    }
    out.values[i] = static_cast<float>(v);
  }
  return out;
}

ImageRecord apply_stage(const ImageRecord& img, const AugmentationStage& stage, RngStream& rng) {
  return std::visit(Overloaded{
                        [&](const RandomResizedCrop& s) { return random_resized_crop(img, s, rng); },
                        [&](const HorizontalFlip& s) { return horizontal_flip(img, s, rng); },
                        [&](const Grayscale& s) { return grayscale(img, s, rng); },
                        [&](const ColorJitter& s) { return color_jitter(img, s, rng); },
                        [&](const Solarization& s) { return solarize(img, s, rng); },
                        [&](const GaussianBlur& s) { return gaussian_blur(img, s, rng); },
                        [&](const GaussianNoise& s) { return gaussian_noise(img, s, rng); },
                        [&](const ToFloatNormalize&) -> ImageRecord {
                          fail(ErrorCode::InvalidParam, "to_float_normalize can only be the last stage");
                        },
                    },
                    stage);
}

View apply_pipeline(const ImageRecord& img, const ViewPipeline& pipeline, const RngStream& rng) {
  if (pipeline.empty()) fail(ErrorCode::InvalidParam, "pipeline has no stages");
  ImageRecord current = img;
  for (std::size_t i = 0; i < pipeline.size(); ++i) {
    if (const auto* norm = std::get_if<ToFloatNormalize>(&pipeline[i])) {
      if (i + 1 != pipeline.size()) fail(ErrorCode::InvalidParam, "to_float_normalize can only be the last stage");
      return to_float_normalize(current, *norm);
    }
    RngStream stage_rng = rng.substream(i);
    current = apply_stage(current, pipeline[i], stage_rng);
  }
  return current;
}

ViewPipeline with_output_size(ViewPipeline pipeline, int out_size) {
  for (auto& stage : pipeline) {
    if (auto* crop = std::get_if<RandomResizedCrop>(&stage)) crop->out_size = out_size;
  }
  return pipeline;
}

ViewPipeline preset_pipeline(std::string_view name, int out_size) {
  RandomResizedCrop crop;
  crop.out_size = out_size;
  const GaussianBlur blur{1.0};
  const Grayscale gray{0.2};
  const Solarization sol{0.2};
  const ColorJitter jitter{0.8};

  if (name == "none") return {};
  if (name == "crops") return {crop};
  if (name == "+blur") return {crop, blur};
  if (name == "+gray") return {crop, blur, gray};
  if (name == "+sol") return {crop, blur, gray, sol};
  if (name == "+jitter") return {crop, blur, gray, sol, jitter};
  if (name == "ssl_default") return {crop, HorizontalFlip{0.5}, jitter, gray, blur, sol};
  fail(ErrorCode::ConfigError, "unknown pipeline preset '" + std::string(name) + "'");
}

const std::vector<std::string>& bench_preset_names() {
  static const std::vector<std::string> names = {"crops", "+blur", "+gray", "+sol", "+jitter"};
  return names;
}

}  // namespace viewforge
