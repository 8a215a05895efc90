#include "viewforge/harness/toy_data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "viewforge/error.hpp"
#include "viewforge/rng.hpp"

namespace viewforge::harness {

namespace {

struct Blob {
  double cy, cx, radius;
  double color[3];
};

}  // namespace

std::vector<ImageRecord> make_toy_images(const ToyDataOptions& o) {
  if (o.samples < 1 || o.size < 4 || o.classes < 2 || o.blobs_per_class < 1 || o.pixel_noise < 0 || o.background_jitter < 0) {
    fail(ErrorCode::InvalidParam, "toy data options out of range");
  }
  const int s = o.size;
  RngStream layout(RngKey{o.seed, 0, 0, 0x70F});
  std::vector<std::vector<Blob>> classes(static_cast<std::size_t>(o.classes));
  for (auto& blobs : classes) {
    for (int b = 0; b < o.blobs_per_class; ++b) {
      Blob blob{};
      blob.cy = layout.uniform(0.2, 0.8) * s;
      blob.cx = layout.uniform(0.2, 0.8) * s;
      blob.radius = layout.uniform(0.08, 0.16) * s;
      for (double& c : blob.color) c = layout.uniform(-1.0, 1.0);
      blobs.push_back(blob);
    }
  }

  std::vector<ImageRecord> out;
  out.reserve(static_cast<std::size_t>(o.samples));
  std::vector<double> px(static_cast<std::size_t>(s) * s * 3);
  for (int i = 0; i < o.samples; ++i) {
    RngStream rng(RngKey{o.seed, 0, static_cast<std::uint64_t>(i), 0x70E});
    const auto label = static_cast<std::uint32_t>(i % o.classes);
    double background[3];
    for (double& c : background) c = 0.5 + rng.uniform(-o.background_jitter, o.background_jitter);
    const double ramp_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double ramp = rng.uniform(0.0, o.background_jitter);
    const double ry = std::sin(ramp_angle), rx = std::cos(ramp_angle);
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        const double r = ramp * ((y - s / 2.0) * ry + (x - s / 2.0) * rx) / s;
        for (int c = 0; c < 3; ++c) px[(static_cast<std::size_t>(y) * s + x) * 3 + c] = background[c] + r;
      }
    }
    for (const Blob& blob : classes[label]) {
      const double amp = rng.uniform(0.2, 0.45);
      const double cy = blob.cy + rng.uniform(-1.5, 1.5);
      const double cx = blob.cx + rng.uniform(-1.5, 1.5);
      const double inv = 1.0 / (2.0 * blob.radius * blob.radius);
      for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
          const double w = amp * std::exp(-((y - cy) * (y - cy) + (x - cx) * (x - cx)) * inv);
          for (int c = 0; c < 3; ++c) px[(static_cast<std::size_t>(y) * s + x) * 3 + c] += w * blob.color[c];
        }
      }
    }
    ImageRecord img(s, s, 3, label);
    for (std::size_t k = 0; k < px.size(); ++k) {
      img.pixels[k] = clamp_round_u8(255.0 * (px[k] + o.pixel_noise * rng.normal()));
    }
    out.push_back(std::move(img));
  }
  return out;
}

Split split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail(ErrorCode::InvalidParam, "train_fraction must be in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  RngStream rng(RngKey{seed, 0, 0, 0x5B117});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_train = std::min(n, static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n))));
  Split split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

}  // namespace viewforge::harness
