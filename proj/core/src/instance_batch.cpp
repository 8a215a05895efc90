#include "viewforge/instance_batch.hpp"

#include "viewforge/augment.hpp"
#include "viewforge/error.hpp"

namespace viewforge {

InstanceBatch build_instance_batch(const ImageRecord& image, double noise_std, std::pair<double, double> patch_scale,
                                   int out_size, const RngStream& rng) {
  if (!image.valid()) fail(ErrorCode::InvalidParam, "build_instance_batch on an invalid image");
  if (!(patch_scale.first > 0.0 && patch_scale.first <= patch_scale.second && patch_scale.second < 1.0)) {
    fail(ErrorCode::InvalidParam, "patch_scale must satisfy 0 < lo <= hi < 1");
  }
  if (out_size < 1) fail(ErrorCode::InvalidParam, "out_size must be >= 1");
  const GaussianNoise noise{noise_std};
  validate_stage(noise);

  InstanceBatch out;
  const ImageRecord full = resize_bilinear(image, out_size, out_size);
  for (int v = 0; v < 2; ++v) {
    RngStream r = rng.substream(static_cast<std::uint64_t>(v));
    out.views[v] = gaussian_noise(full, noise, r);
  }
  RngStream r = rng.substream(2);
  RngStream crop_rng = r.substream(0);
  const CropBox box = sample_crop_box(image.height, image.width, patch_scale.first, patch_scale.second, 3.0 / 4.0,
                                      4.0 / 3.0, crop_rng);
  RngStream noise_rng = r.substream(1);
  out.views[2] = gaussian_noise(resize_bilinear(image, box, out_size, out_size), noise, noise_rng);
  out.relation.set_pair(0, 1);
  return out;
}

}  // namespace viewforge
