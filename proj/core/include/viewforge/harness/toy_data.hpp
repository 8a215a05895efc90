#pragma once

#include <cstdint>
#include <vector>

#include "viewforge/image.hpp"

namespace viewforge::harness {

// Synthetic labelled images. Each class owns a few colored Gaussian blobs at
// fixed positions; a sample perturbs their amplitudes and positions (the
// class-dependent low-dimensional part) over a mid-gray background with a
// small random tint and ramp, plus per-pixel noise (nuisance).
struct ToyDataOptions {
  int samples = 2000;
  int size = 24;
  int classes = 4;
  int blobs_per_class = 3;
  double pixel_noise = 0.1;        // on the [0, 1] scale
  double background_jitter = 0.05;  // max tint / ramp amplitude
  std::uint64_t seed = 0;
};

std::vector<ImageRecord> make_toy_images(const ToyDataOptions& options);

// Fixed split: a seeded permutation, first round(train_fraction * n) indices
// are train. Both lists are returned in ascending order.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};
Split split_indices(std::size_t n, double train_fraction, std::uint64_t seed);

}  // namespace viewforge::harness
