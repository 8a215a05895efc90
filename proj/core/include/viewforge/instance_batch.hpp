#pragma once

#include <array>
#include <utility>

#include "viewforge/image.hpp"
#include "viewforge/losses.hpp"
#include "viewforge/rng.hpp"

namespace viewforge {

struct InstanceBatch {
  // pos_a, pos_b, patch_neg
  std::array<ImageRecord, 3> views;
  // Ones at (0, 1) and (1, 0) only; the patch is a pure negative.
  RelationMatrix relation{3};
};

// pos_a / pos_b: the whole image resized to out_size x out_size plus
// independent Gaussian noise. patch_neg: a random crop whose area fraction lies
// in patch_scale, resized and noised the same way. noise_std is on the [0, 1]
// intensity scale.
InstanceBatch build_instance_batch(const ImageRecord& image, double noise_std,
                                   std::pair<double, double> patch_scale, int out_size, const RngStream& rng);

}  // namespace viewforge
