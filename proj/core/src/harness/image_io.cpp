#include "viewforge/harness/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <sstream>

#include "viewforge/dataset.hpp"
#include "viewforge/error.hpp"
#include "viewforge/harness/config.hpp"

namespace viewforge::harness {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool is_image_name(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm" || ext == ".jpg" || ext == ".jpeg";
}

ImageRecord parse_pnm(const std::vector<std::uint8_t>& bytes, const fs::path& path, std::uint32_t label) {
  std::size_t pos = 2;
  auto next_token = [&]() -> int {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    int v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      any = true;
      if (v > 1 << 20) break;
    }
    if (!any) fail(ErrorCode::FormatError, path.string() + ": malformed PNM header");
    return v;
  };
  const int channels = bytes[1] == '5' ? 1 : 3;
  const int w = next_token();
  const int h = next_token();
  const int maxval = next_token();
  if (maxval != 255 || w < 1 || h < 1) fail(ErrorCode::FormatError, path.string() + ": only 8-bit PNM is supported");
  ++pos;  // single whitespace before the raster
  ImageRecord img(h, w, channels, label);
  if (bytes.size() < pos + img.pixels.size()) fail(ErrorCode::FormatError, path.string() + ": truncated raster");
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), img.pixels.size(), img.pixels.begin());
  return img;
}

}  // namespace

ImageRecord read_image_file(const fs::path& path, std::uint32_t label) {
  const auto bytes = slurp(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) return parse_pnm(bytes, path, label);
  if (bytes.size() >= 2 && bytes[0] == 0xFF && bytes[1] == 0xD8) {
    try {
      ImageRecord img = decode_jpeg(bytes);
      img.label = label;
      return img;
    } catch (const Error& e) {
      fail(ErrorCode::FormatError, path.string() + ": " + e.what());
    }
  }
  fail(ErrorCode::FormatError, path.string() + ": not a binary PNM or JPEG file");
}

void write_pnm(const ImageRecord& img, const fs::path& path) {
  if (!img.valid() || (img.channels != 1 && img.channels != 3)) {
    fail(ErrorCode::InvalidParam, "write_pnm needs a valid 1- or 3-channel image");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << (img.channels == 1 ? "P5" : "P6") << "\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

std::vector<LabeledPath> list_image_directory(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorCode::IoError, dir.string() + " is not a directory");
  std::vector<fs::path> files, subdirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) subdirs.push_back(entry.path());
    else if (entry.is_regular_file() && is_image_name(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::sort(subdirs.begin(), subdirs.end());
  std::vector<LabeledPath> out;
  for (const auto& f : files) out.push_back({f, 0});
  for (std::size_t label = 0; label < subdirs.size(); ++label) {
    std::vector<fs::path> inner;
    for (const auto& entry : fs::directory_iterator(subdirs[label])) {
      if (entry.is_regular_file() && is_image_name(entry.path())) inner.push_back(entry.path());
    }
    std::sort(inner.begin(), inner.end());
    for (const auto& f : inner) out.push_back({f, static_cast<std::uint32_t>(label)});
  }
  return out;
}

std::vector<LabeledPath> read_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) fail(ErrorCode::IoError, "cannot open manifest " + manifest.string());
  std::vector<LabeledPath> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto sp = line.find_last_of(" \t");
    if (sp == std::string::npos) {
      fail(ErrorCode::ConfigError, manifest.string() + ":" + std::to_string(lineno) + ": expected 'path label'");
    }
    const auto label = parse_int(line.substr(sp + 1), manifest.string() + ":" + std::to_string(lineno));
    if (label < 0 || label > 0xFFFFFFFFll) fail(ErrorCode::ConfigError, "label out of range in " + manifest.string());
    out.push_back({manifest.parent_path() / trim(line.substr(0, sp)), static_cast<std::uint32_t>(label)});
  }
  return out;
}

std::vector<ImageRecord> load_images(const std::vector<LabeledPath>& files) {
  std::vector<ImageRecord> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_image_file(f.path, f.label));
  return out;
}

}  // namespace viewforge::harness
