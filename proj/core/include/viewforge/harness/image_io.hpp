#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "viewforge/image.hpp"

namespace viewforge::harness {

// Binary PGM (P5) / PPM (P6) with maxval 255, or JPEG, chosen by content.
ImageRecord read_image_file(const std::filesystem::path& path, std::uint32_t label = 0);
void write_pnm(const ImageRecord& img, const std::filesystem::path& path);

struct LabeledPath {
  std::filesystem::path path;
  std::uint32_t label = 0;
};

// Image files (.pgm .ppm .pnm .jpg .jpeg) directly in `dir`, label 0, plus
// files in immediate subdirectories labelled by the subdirectory's position
// in sorted order. Sorted by path. Throws IoError if `dir` is not a directory.
std::vector<LabeledPath> list_image_directory(const std::filesystem::path& dir);

// One `relative/path label` pair per line, `#` comments allowed; paths are
// relative to the manifest's directory.
std::vector<LabeledPath> read_manifest(const std::filesystem::path& manifest);

std::vector<ImageRecord> load_images(const std::vector<LabeledPath>& files);

}  // namespace viewforge::harness
