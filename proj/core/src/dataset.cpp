#include "viewforge/dataset.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "jpeg_codec.hpp"
#include "viewforge/error.hpp"

namespace viewforge {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, std::size_t pos, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out[pos + i] = static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * i));
  }
}

template <typename T>
T get_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

std::uint64_t align_up(std::uint64_t v, std::uint64_t a) { return (v + a - 1) / a * a; }

DatasetHeader decode_header(const std::uint8_t* p) {
  DatasetHeader h;
  h.format_version = get_le<std::uint32_t>(p + 4);
  h.sample_count = get_le<std::uint64_t>(p + 8);
  h.encoding_mode = static_cast<EncodingMode>(p[16]);
  h.channels = p[17];
  h.max_height = get_le<std::uint16_t>(p + 18);
  h.max_width = get_le<std::uint16_t>(p + 20);
  h.descriptor_table_offset = get_le<std::uint64_t>(p + 24);
  h.data_region_offset = get_le<std::uint64_t>(p + 32);
  return h;
}

SampleDescriptor decode_descriptor(const std::uint8_t* p) {
  SampleDescriptor d;
  d.byte_offset = get_le<std::uint64_t>(p);
  d.byte_length = get_le<std::uint32_t>(p + 8);
  d.height = get_le<std::uint16_t>(p + 12);
  d.width = get_le<std::uint16_t>(p + 14);
  d.label = get_le<std::uint32_t>(p + 16);
  d.checksum = get_le<std::uint32_t>(p + 20);
  return d;
}

}  // namespace

class MappedFile {
 public:
  explicit MappedFile(const std::filesystem::path& path) {
    fd_ = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd_ < 0) fail(ErrorCode::IoError, "cannot open " + path.string() + ": " + std::strerror(errno));
    struct stat st {};
    if (::fstat(fd_, &st) != 0) {
      ::close(fd_);
      fail(ErrorCode::IoError, "cannot stat " + path.string());
    }
    size_ = static_cast<std::size_t>(st.st_size);
    if (size_ > 0) {
      void* addr = ::mmap(nullptr, size_, PROT_READ, MAP_SHARED, fd_, 0);
      if (addr == MAP_FAILED) {
        ::close(fd_);
        fail(ErrorCode::IoError, "cannot map " + path.string() + ": " + std::strerror(errno));
      }
      data_ = static_cast<const std::uint8_t*>(addr);
    }
  }
  ~MappedFile() {
    if (data_ != nullptr) ::munmap(const_cast<std::uint8_t*>(data_), size_);
    if (fd_ >= 0) ::close(fd_);
  }
  MappedFile(const MappedFile&) = delete;
  MappedFile& operator=(const MappedFile&) = delete;

  const std::uint8_t* data() const noexcept { return data_; }
  std::size_t size() const noexcept { return size_; }

 private:
  int fd_ = -1;
  const std::uint8_t* data_ = nullptr;
  std::size_t size_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) noexcept {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = ::crc32(crc, bytes.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_header(const DatasetHeader& h) {
  std::vector<std::uint8_t> out(kHeaderSize, 0);
  std::memcpy(out.data(), kMagic, 4);
  put_le<std::uint32_t>(out, 4, h.format_version);
  put_le<std::uint64_t>(out, 8, h.sample_count);
  out[16] = static_cast<std::uint8_t>(h.encoding_mode);
  out[17] = h.channels;
  put_le<std::uint16_t>(out, 18, h.max_height);
  put_le<std::uint16_t>(out, 20, h.max_width);
  put_le<std::uint64_t>(out, 24, h.descriptor_table_offset);
  put_le<std::uint64_t>(out, 32, h.data_region_offset);
  return out;
}

std::vector<std::uint8_t> encode_descriptor(const SampleDescriptor& d) {
  std::vector<std::uint8_t> out(kDescriptorSize, 0);
  put_le<std::uint64_t>(out, 0, d.byte_offset);
  put_le<std::uint32_t>(out, 8, d.byte_length);
  put_le<std::uint16_t>(out, 12, d.height);
  put_le<std::uint16_t>(out, 14, d.width);
  put_le<std::uint32_t>(out, 16, d.label);
  put_le<std::uint32_t>(out, 20, d.checksum);
  return out;
}

PackSummary pack_dataset(std::span<const ImageRecord> source, const PackOptions& options,
                         const std::filesystem::path& path) {
  if (source.empty()) fail(ErrorCode::EmptyDataset, "nothing to pack");
  if (options.encoding_mode == EncodingMode::Jpeg && (options.jpeg_quality < 1 || options.jpeg_quality > 100)) {
    fail(ErrorCode::InvalidParam, "jpeg_quality must be in 1..100");
  }
  const int channels = source.front().channels;
  if (channels < 1 || channels > 255) fail(ErrorCode::ShapeMismatch, "channel count must be in 1..255");

  DatasetHeader header;
  header.sample_count = source.size();
  header.encoding_mode = options.encoding_mode;
  header.channels = static_cast<std::uint8_t>(channels);
  for (std::size_t i = 0; i < source.size(); ++i) {
    const ImageRecord& img = source[i];
    if (img.channels != channels) {
      fail(ErrorCode::ShapeMismatch, "sample " + std::to_string(i) + " has " + std::to_string(img.channels) +
                                         " channels, expected " + std::to_string(channels));
    }
    if (!img.valid() || img.height > 0xFFFF || img.width > 0xFFFF) {
      fail(ErrorCode::ShapeMismatch, "sample " + std::to_string(i) + " has an invalid shape");
    }
    header.max_height = std::max<std::uint16_t>(header.max_height, static_cast<std::uint16_t>(img.height));
    header.max_width = std::max<std::uint16_t>(header.max_width, static_cast<std::uint16_t>(img.width));
  }
  header.descriptor_table_offset = kHeaderSize;
  header.data_region_offset = align_up(kHeaderSize + kDescriptorSize * source.size(), kPageAlignment);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot create " + path.string());

  // Payloads are written first at their final offsets; the table is written last.
  std::vector<SampleDescriptor> table(source.size());
  out.seekp(static_cast<std::streamoff>(header.data_region_offset));
  std::uint64_t offset = header.data_region_offset;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const ImageRecord& img = source[i];
    std::vector<std::uint8_t> encoded;
    std::span<const std::uint8_t> payload = img.pixels;
    if (options.encoding_mode == EncodingMode::Jpeg) {
      encoded = detail::jpeg_encode(img, options.jpeg_quality);
      payload = encoded;
    }
    if (payload.size() > 0xFFFFFFFFull) fail(ErrorCode::ShapeMismatch, "sample payload exceeds 4 GiB");
    table[i] = SampleDescriptor{offset, static_cast<std::uint32_t>(payload.size()),
                                static_cast<std::uint16_t>(img.height), static_cast<std::uint16_t>(img.width),
                                img.label, crc32_of(payload)};
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    offset += payload.size();
  }
  out.seekp(0);
  const auto head = encode_header(header);
  out.write(reinterpret_cast<const char*>(head.data()), static_cast<std::streamsize>(head.size()));
  for (const auto& d : table) {
    const auto bytes = encode_descriptor(d);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  out.flush();
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
  return PackSummary{header.sample_count, offset, options.encoding_mode};
}

std::uint64_t DatasetHandle::file_size() const noexcept { return file_ ? file_->size() : 0; }

SampleDescriptor DatasetHandle::descriptor(std::uint64_t index) const {
  if (index >= header_.sample_count) {
    fail(ErrorCode::IndexError,
         "index " + std::to_string(index) + " out of range for " + std::to_string(header_.sample_count) + " samples");
  }
  return decode_descriptor(file_->data() + header_.descriptor_table_offset + index * kDescriptorSize);
}

std::span<const std::uint8_t> DatasetHandle::payload(std::uint64_t index) const {
  const SampleDescriptor d = descriptor(index);
  if (d.byte_offset > file_->size() || d.byte_length > file_->size() - d.byte_offset) {
    fail(ErrorCode::CorruptSample, "sample " + std::to_string(index) + " payload lies outside the file");
  }
  return {file_->data() + d.byte_offset, d.byte_length};
}

DatasetHandle open_dataset(const std::filesystem::path& path) {
  auto file = std::make_shared<const MappedFile>(path);
  if (file->size() < kHeaderSize) fail(ErrorCode::FormatError, path.string() + ": file shorter than header");
  const std::uint8_t* base = file->data();
  if (std::memcmp(base, kMagic, 4) != 0) fail(ErrorCode::FormatError, path.string() + ": bad magic");
  DatasetHeader header = decode_header(base);
  if (header.format_version != kFormatVersion) {
    fail(ErrorCode::FormatError, path.string() + ": unsupported format version " + std::to_string(header.format_version));
  }
  if (header.encoding_mode != EncodingMode::Raw && header.encoding_mode != EncodingMode::Jpeg) {
    fail(ErrorCode::FormatError, path.string() + ": unknown encoding mode");
  }
  if (header.sample_count == 0) fail(ErrorCode::FormatError, path.string() + ": sample_count is zero");
  if (header.descriptor_table_offset < kHeaderSize) {
    fail(ErrorCode::FormatError, path.string() + ": descriptor table overlaps header");
  }
  const std::uint64_t max_entries = (file->size() - std::min<std::uint64_t>(file->size(), header.descriptor_table_offset)) /
                                    kDescriptorSize;
  if (header.sample_count > max_entries) {
    fail(ErrorCode::CorruptFile, path.string() + ": descriptor table truncated (" + std::to_string(max_entries) +
                                     " of " + std::to_string(header.sample_count) + " entries present)");
  }
  DatasetHandle handle;
  handle.file_ = std::move(file);
  handle.header_ = header;
  handle.path_ = path;
  return handle;
}

ImageRecord read_sample(const DatasetHandle& handle, std::uint64_t index) {
  const SampleDescriptor d = handle.descriptor(index);
  const auto bytes = handle.payload(index);
  if (crc32_of(bytes) != d.checksum) {
    fail(ErrorCode::CorruptSample, "sample " + std::to_string(index) + " failed its checksum");
  }
  const DatasetHeader& h = handle.header();
  ImageRecord img(d.height, d.width, h.channels, d.label);
  if (h.encoding_mode == EncodingMode::Raw) {
    if (bytes.size() != img.pixels.size()) {
      fail(ErrorCode::CorruptSample, "sample " + std::to_string(index) + " payload size does not match its shape");
    }
    std::memcpy(img.pixels.data(), bytes.data(), bytes.size());
  } else if (!detail::jpeg_decode(bytes, img)) {
    fail(ErrorCode::CorruptSample, "sample " + std::to_string(index) + " is not a decodable JPEG of the stored shape");
  }
  return img;
}

ValidationReport validate(const DatasetHandle& handle) {
  ValidationReport report;
  const DatasetHeader& h = handle.header();
  report.data_region_aligned = h.data_region_offset % kPageAlignment == 0;
  std::uint64_t previous_end = h.data_region_offset;
  for (std::uint64_t i = 0; i < h.sample_count; ++i) {
    const SampleDescriptor d = handle.descriptor(i);
    ++report.samples_checked;
    bool descriptor_ok = d.byte_offset >= previous_end && d.height <= h.max_height && d.width <= h.max_width &&
                         d.byte_offset <= handle.file_size() && d.byte_length <= handle.file_size() - d.byte_offset;
    if (h.encoding_mode == EncodingMode::Raw) {
      descriptor_ok = descriptor_ok && d.byte_length == static_cast<std::uint64_t>(d.height) * d.width * h.channels;
    }
    if (!descriptor_ok) {
      ++report.descriptor_violations;
      report.failed_indices.push_back(i);
      continue;
    }
    previous_end = d.byte_offset + std::max<std::uint64_t>(d.byte_length, 1);
    if (crc32_of(handle.payload(i)) != d.checksum) {
      ++report.checksum_failures;
      report.failed_indices.push_back(i);
    }
  }
  return report;
}

std::vector<std::uint8_t> encode_jpeg(const ImageRecord& img, int quality) {
  if (quality < 1 || quality > 100) fail(ErrorCode::InvalidParam, "jpeg quality must be in 1..100");
  return detail::jpeg_encode(img, quality);
}

ImageRecord decode_jpeg(std::span<const std::uint8_t> bytes) {
  ImageRecord img;
  if (!detail::jpeg_decode(bytes, img)) fail(ErrorCode::FormatError, "not a decodable grayscale or RGB JPEG stream");
  return img;
}

}  // namespace viewforge
