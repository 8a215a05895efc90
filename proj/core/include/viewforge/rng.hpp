#pragma once

#include <array>
#include <cstdint>

namespace viewforge {

// Philox4x32-10 block function (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

struct RngKey {
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  std::uint64_t sample = 0;
  std::uint64_t view = 0;

  bool operator==(const RngKey&) const = default;
};

// Counter-based random stream. The output sequence depends only on the key,
// the sub-stream path and the number of draws taken, never on which thread
// evaluates it or on what other streams did before.
class RngStream {
 public:
  explicit RngStream(RngKey key);

  // Independent child stream; the child's draws do not advance this stream.
  RngStream substream(std::uint64_t id) const;

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  // Unbiased integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  // Integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p);
  double normal();

  const RngKey& key() const noexcept { return key_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  // Number of 32-bit words consumed so far.
  std::uint64_t words_drawn() const noexcept { return words_drawn_; }

 private:
  RngStream(RngKey key, PhiloxKey philox_key, std::uint64_t stream_id);
  void refill();

  RngKey key_;
  PhiloxKey philox_key_{};
  std::uint64_t stream_id_ = 0;
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  int buffered_ = 0;
  std::uint64_t words_drawn_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace viewforge
