#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "viewforge/image.hpp"

namespace viewforge {

// On-disk layout (little-endian), see docs/packed_format.md:
//   [0, 64)                      header
//   [64, 64 + 24 * n)            descriptor table
//   [data_region_offset, ...)    payloads, data_region_offset % 4096 == 0
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderSize = 64;
inline constexpr std::size_t kDescriptorSize = 24;
inline constexpr std::uint64_t kPageAlignment = 4096;
inline constexpr char kMagic[4] = {'S', 'S', 'L', 'P'};

enum class EncodingMode : std::uint8_t { Raw = 0, Jpeg = 1 };

struct DatasetHeader {
  std::uint32_t format_version = kFormatVersion;
  std::uint64_t sample_count = 0;
  EncodingMode encoding_mode = EncodingMode::Raw;
  std::uint16_t max_height = 0;
  std::uint16_t max_width = 0;
  std::uint8_t channels = 0;
  std::uint64_t descriptor_table_offset = kHeaderSize;
  std::uint64_t data_region_offset = 0;
};

struct SampleDescriptor {
  std::uint64_t byte_offset = 0;
  std::uint32_t byte_length = 0;
  std::uint16_t height = 0;
  std::uint16_t width = 0;
  std::uint32_t label = 0;
  std::uint32_t checksum = 0;
};

struct PackOptions {
  EncodingMode encoding_mode = EncodingMode::Raw;
  int jpeg_quality = 90;  // 1..100
};

struct PackSummary {
  std::uint64_t sample_count = 0;
  std::uint64_t file_bytes = 0;
  EncodingMode encoding_mode = EncodingMode::Raw;
};

// Writes source to path in source order. Throws EmptyDataset, ShapeMismatch,
// InvalidParam or IoError.
PackSummary pack_dataset(std::span<const ImageRecord> source, const PackOptions& options,
                         const std::filesystem::path& path);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) noexcept;

// Standalone JPEG helpers using the container's codec. decode_jpeg accepts
// grayscale or RGB streams and throws FormatError on anything else.
std::vector<std::uint8_t> encode_jpeg(const ImageRecord& img, int quality);
ImageRecord decode_jpeg(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_header(const DatasetHeader& header);
std::vector<std::uint8_t> encode_descriptor(const SampleDescriptor& descriptor);

struct ValidationReport {
  std::uint64_t samples_checked = 0;
  std::uint64_t checksum_failures = 0;
  std::vector<std::uint64_t> failed_indices;
  bool data_region_aligned = true;
  // Monotonic offsets, payload within file, per-sample size within header maxima.
  std::uint64_t descriptor_violations = 0;

  bool ok() const noexcept { return checksum_failures == 0 && data_region_aligned && descriptor_violations == 0; }
};

class MappedFile;

// Immutable view over a packed dataset file. Copies share the same mapping;
// read_sample is safe to call concurrently from any number of threads.
class DatasetHandle {
 public:
  const DatasetHeader& header() const noexcept { return header_; }
  std::uint64_t sample_count() const noexcept { return header_.sample_count; }
  std::uint64_t file_size() const noexcept;
  const std::filesystem::path& path() const noexcept { return path_; }

  // O(1): decoded straight from the mapped descriptor table.
  SampleDescriptor descriptor(std::uint64_t index) const;
  // Payload bytes as stored (RAW pixels or JPEG stream), bounds-checked.
  std::span<const std::uint8_t> payload(std::uint64_t index) const;

 private:
  friend DatasetHandle open_dataset(const std::filesystem::path& path);
  std::shared_ptr<const MappedFile> file_;
  DatasetHeader header_;
  std::filesystem::path path_;
};

// Throws FormatError (bad magic/version/short header), CorruptFile (truncated
// descriptor table) or IoError.
DatasetHandle open_dataset(const std::filesystem::path& path);

// Throws IndexError or CorruptSample.
ImageRecord read_sample(const DatasetHandle& handle, std::uint64_t index);

ValidationReport validate(const DatasetHandle& handle);

}  // namespace viewforge
