#include <algorithm>
#include <numeric>

#include "viewforge/error.hpp"
#include "viewforge/loader.hpp"

namespace viewforge {

namespace {

// Distinct from any real view index so plan draws never alias augmentation draws.
constexpr std::uint64_t kPlanStream = 0xE90C'0000'0000'0001ull;

void shuffle(std::vector<std::uint64_t>::iterator first, std::vector<std::uint64_t>::iterator last, RngStream& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) std::iter_swap(first + (i - 1), first + rng.below(i));
}

}  // namespace

std::string_view to_string(Traversal t) noexcept {
  switch (t) {
    case Traversal::Sequential: return "sequential";
    case Traversal::Random: return "random";
    case Traversal::QuasiRandom: return "quasi_random";
  }
  return "unknown";
}

Traversal parse_traversal(std::string_view name) {
  if (name == "sequential") return Traversal::Sequential;
  if (name == "random") return Traversal::Random;
  if (name == "quasi_random") return Traversal::QuasiRandom;
  fail(ErrorCode::ConfigError, "unknown traversal '" + std::string(name) + "'");
}

std::vector<std::uint64_t> build_epoch_plan(std::uint64_t sample_count, Traversal traversal, std::uint64_t seed,
                                            std::uint64_t epoch, std::uint64_t group_size) {
  if (sample_count == 0) fail(ErrorCode::EmptyDataset, "epoch plan over zero samples");
  std::vector<std::uint64_t> plan(sample_count);
  std::iota(plan.begin(), plan.end(), 0);
  if (traversal == Traversal::Sequential) return plan;

  RngStream rng(RngKey{seed, epoch, 0, kPlanStream});
  if (traversal == Traversal::Random) {
    shuffle(plan.begin(), plan.end(), rng);
    return plan;
  }

  group_size = std::clamp<std::uint64_t>(group_size, 1, sample_count);
  const std::uint64_t groups = (sample_count + group_size - 1) / group_size;
  std::vector<std::uint64_t> order(groups);
  std::iota(order.begin(), order.end(), 0);
  RngStream group_rng = rng.substream(0);
  shuffle(order.begin(), order.end(), group_rng);

  std::vector<std::uint64_t> out;
  out.reserve(sample_count);
  RngStream member_rng = rng.substream(1);
  for (std::uint64_t g : order) {
    const std::uint64_t begin = g * group_size;
    const std::uint64_t end = std::min(begin + group_size, sample_count);
    const auto block_start = out.size();
    for (std::uint64_t i = begin; i < end; ++i) out.push_back(i);
    shuffle(out.begin() + static_cast<std::ptrdiff_t>(block_start), out.end(), member_rng);
  }
  return out;
}

std::uint64_t default_quasi_random_group(const DatasetHandle& dataset) {
  const auto& h = dataset.header();
  const std::uint64_t payload_bytes =
      dataset.file_size() > h.data_region_offset ? dataset.file_size() - h.data_region_offset : 0;
  const std::uint64_t mean_bytes = std::max<std::uint64_t>(1, payload_bytes / h.sample_count);
  return std::max<std::uint64_t>(1, (std::uint64_t{1} << 20) / mean_bytes);
}

int resolution_at(const ResolutionSchedule& s, std::int64_t epoch) {
  if (s.start_res > s.end_res || s.start_epoch > s.end_epoch) {
    fail(ErrorCode::InvalidParam, "resolution schedule must satisfy start <= end");
  }
  if (epoch <= s.start_epoch) return s.start_res;
  if (epoch >= s.end_epoch) return s.end_res;
  const double t = static_cast<double>(epoch - s.start_epoch) / (s.end_epoch - s.start_epoch);
  const double res = s.start_res + t * (s.end_res - s.start_res);
  const int rounded = static_cast<int>(res) / 32 * 32;
  return std::clamp(rounded, s.start_res, s.end_res);
}

}  // namespace viewforge
