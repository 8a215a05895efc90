#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "viewforge/image.hpp"

namespace viewforge::detail {

// Baseline JPEG with 4:4:4 sampling. Channels must be 1 or 3.
std::vector<std::uint8_t> jpeg_encode(const ImageRecord& img, int quality);

// Returns false on a malformed stream instead of throwing. A default-constructed
// `out` is sized from the stream; otherwise the stream must match its shape.
bool jpeg_decode(std::span<const std::uint8_t> bytes, ImageRecord& out);

}  // namespace viewforge::detail
