#include "viewforge/image.hpp"

#include <algorithm>
#include <cmath>

#include "viewforge/error.hpp"

namespace viewforge {

namespace {

struct Tap {
  int lo;
  int hi;
  float frac;
};

std::vector<Tap> build_taps(int src_offset, int src_len, int out_len) {
  std::vector<Tap> taps(out_len);
  const double scale = static_cast<double>(src_len) / out_len;
  for (int i = 0; i < out_len; ++i) {
    double pos = (i + 0.5) * scale - 0.5;
    pos = std::clamp(pos, 0.0, static_cast<double>(src_len - 1));
    const int lo = static_cast<int>(std::floor(pos));
    const int hi = std::min(lo + 1, src_len - 1);
    taps[i] = {src_offset + lo, src_offset + hi, static_cast<float>(pos - lo)};
  }
  return taps;
}

}  // namespace

ImageRecord resize_bilinear(const ImageRecord& img, const CropBox& box, int out_h, int out_w) {
  if (!img.valid()) fail(ErrorCode::ShapeMismatch, "resize of malformed image");
  if (out_h < 1 || out_w < 1) fail(ErrorCode::InvalidParam, "resize output must be at least 1x1");
  if (box.height < 1 || box.width < 1 || box.top < 0 || box.left < 0 || box.top + box.height > img.height ||
      box.left + box.width > img.width) {
    fail(ErrorCode::InvalidParam, "crop window outside image");
  }

  const auto ytaps = build_taps(box.top, box.height, out_h);
  const auto xtaps = build_taps(box.left, box.width, out_w);
  const int c = img.channels;
  ImageRecord out(out_h, out_w, c, img.label);

  for (int y = 0; y < out_h; ++y) {
    const Tap ty = ytaps[y];
    const std::uint8_t* row0 = img.pixels.data() + static_cast<std::size_t>(ty.lo) * img.width * c;
    const std::uint8_t* row1 = img.pixels.data() + static_cast<std::size_t>(ty.hi) * img.width * c;
    std::uint8_t* dst = out.pixels.data() + static_cast<std::size_t>(y) * out_w * c;
    for (int x = 0; x < out_w; ++x) {
      const Tap tx = xtaps[x];
      for (int ch = 0; ch < c; ++ch) {
        const float a = row0[tx.lo * c + ch];
        const float b = row0[tx.hi * c + ch];
        const float d = row1[tx.lo * c + ch];
        const float e = row1[tx.hi * c + ch];
        const float top = a + (b - a) * tx.frac;
        const float bottom = d + (e - d) * tx.frac;
        dst[x * c + ch] = clamp_round_u8(top + (bottom - top) * ty.frac);
      }
    }
  }
  return out;
}

ImageRecord resize_bilinear(const ImageRecord& img, int out_h, int out_w) {
  return resize_bilinear(img, CropBox{0, 0, img.height, img.width}, out_h, out_w);
}

}  // namespace viewforge
