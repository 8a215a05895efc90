#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace viewforge {

// 8-bit image, row-major with interleaved channels: pixels[(y * width + x) * channels + c].
struct ImageRecord {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
  std::uint32_t label = 0;

  ImageRecord() = default;
  ImageRecord(int h, int w, int c, std::uint32_t lbl = 0)
      : height(h), width(w), channels(c), pixels(static_cast<std::size_t>(h) * w * c), label(lbl) {}

  std::size_t size() const noexcept { return pixels.size(); }
  bool valid() const noexcept {
    return height > 0 && width > 0 && channels > 0 &&
           pixels.size() == static_cast<std::size_t>(height) * width * channels;
  }

  std::uint8_t& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  std::uint8_t at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool operator==(const ImageRecord&) const = default;
};

// Float image produced by the normalization stage; same layout as ImageRecord.
struct FloatImage {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> values;

  bool operator==(const FloatImage&) const = default;
};

struct CropBox {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
};

// Bilinear resampling of a crop window to out_h x out_w using half-pixel centers.
// A window equal to the full image at the same output size reproduces the input.
ImageRecord resize_bilinear(const ImageRecord& img, const CropBox& box, int out_h, int out_w);
ImageRecord resize_bilinear(const ImageRecord& img, int out_h, int out_w);

inline std::uint8_t clamp_round_u8(double v) noexcept {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(v + 0.5);
}

}  // namespace viewforge
