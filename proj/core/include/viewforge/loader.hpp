#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "viewforge/augment.hpp"
#include "viewforge/dataset.hpp"

namespace viewforge {

enum class Traversal { Sequential, Random, QuasiRandom };

std::string_view to_string(Traversal t) noexcept;
Traversal parse_traversal(std::string_view name);

struct LoaderConfig {
  std::size_t batch_size = 64;
  std::size_t num_workers = 1;
  Traversal traversal = Traversal::Random;
  std::uint64_t seed = 0;
  bool drop_last = false;
  // One pipeline per view; an empty pipeline passes the decoded image through.
  std::vector<ViewPipeline> view_pipelines;
  std::size_t prefetch_depth = 2;
  // QUASI_RANDOM group size; 0 selects the number of samples per MiB of payload.
  std::size_t quasi_random_group = 0;
};

void validate(const LoaderConfig& config);

// Output side length ramps linearly from start_res to end_res, floored to a
// multiple of 32 and clamped to [start_res, end_res]. Applied per epoch.
struct ResolutionSchedule {
  int start_res = 160;
  int end_res = 224;
  int start_epoch = 0;
  int end_epoch = 0;
};

int resolution_at(const ResolutionSchedule& schedule, std::int64_t epoch);

// SEQUENTIAL: identity. RANDOM: uniform shuffle keyed by (seed, epoch).
// QUASI_RANDOM: contiguous groups of group_size indices are shuffled as
// blocks, then members are shuffled within each block.
std::vector<std::uint64_t> build_epoch_plan(std::uint64_t sample_count, Traversal traversal, std::uint64_t seed,
                                            std::uint64_t epoch, std::uint64_t group_size = 1);

std::uint64_t default_quasi_random_group(const DatasetHandle& dataset);

// Key under which view `view` of dataset sample `sample` is augmented.
inline RngKey view_key(std::uint64_t seed, std::uint64_t epoch, std::uint64_t sample, std::uint64_t view) {
  return RngKey{seed, epoch, sample, view};
}

// Applies `pipeline` (or passes through when empty) under the view key.
View make_view(const ImageRecord& img, const ViewPipeline& pipeline, const RngKey& key);

// count x H x W x C, row-major, same layout per row as ImageRecord.
struct ViewTensor {
  int count = 0;
  int height = 0;
  int width = 0;
  int channels = 0;
  std::variant<std::vector<std::uint8_t>, std::vector<float>> data;

  bool is_float() const noexcept { return std::holds_alternative<std::vector<float>>(data); }
  const std::vector<std::uint8_t>& bytes() const { return std::get<std::vector<std::uint8_t>>(data); }
  const std::vector<float>& floats() const { return std::get<std::vector<float>>(data); }
  std::size_t row_size() const noexcept { return static_cast<std::size_t>(height) * width * channels; }

  bool operator==(const ViewTensor&) const = default;
};

struct Batch {
  std::vector<ViewTensor> views;
  std::vector<std::uint32_t> labels;
  std::vector<std::uint64_t> sample_indices;
  std::uint64_t epoch = 0;
  std::uint64_t batch_index = 0;

  bool operator==(const Batch&) const = default;
};

// Stacks per-row views (rows[r][v]) into one tensor per view. All rows of a
// view must share shape and element type (ShapeMismatch otherwise).
Batch assemble_batch(std::vector<std::vector<View>>&& rows, std::vector<std::uint32_t> labels,
                     std::vector<std::uint64_t> sample_indices, std::uint64_t epoch, std::uint64_t batch_index);

struct StageTimes {
  double decode_ms = 0.0;
  double augment_ms = 0.0;
  double assembly_ms = 0.0;
};

// Multi-worker loader. Workers claim samples in plan order inside a window of
// prefetch_depth batches; completed batches are handed out strictly in plan
// order, so the stream is independent of worker count and timing.
// One consumer per instance.
class MultiViewLoader {
 public:
  MultiViewLoader(DatasetHandle dataset, LoaderConfig config, std::optional<ResolutionSchedule> schedule = {});
  ~MultiViewLoader();
  MultiViewLoader(const MultiViewLoader&) = delete;
  MultiViewLoader& operator=(const MultiViewLoader&) = delete;

  // Discards any in-flight work and begins the given epoch.
  void start_epoch(std::uint64_t epoch);
  // Next batch of the current epoch (epoch 0 is started on first use), or
  // nullopt once the epoch is exhausted. Read/augment errors are rethrown
  // here with the sample index in the message.
  std::optional<Batch> next_batch();
  // Joins all workers. A later next_batch() restarts the current epoch from its first batch.
  void stop() {
    stop_workers();
    started_ = false;
  }

  std::size_t batches_per_epoch() const noexcept;
  std::uint64_t current_epoch() const noexcept { return epoch_; }
  // Output side length for the current epoch, or 0 without a schedule.
  int current_resolution() const noexcept { return resolution_; }
  StageTimes stage_times() const noexcept;
  void reset_stage_times() noexcept;
  const LoaderConfig& config() const noexcept { return config_; }
  const DatasetHandle& dataset() const noexcept { return dataset_; }

 private:
  struct Slot {
    std::uint64_t batch_index = 0;
    std::size_t remaining = 0;
    std::vector<std::vector<View>> rows;
    std::vector<std::uint32_t> labels;
    std::vector<std::uint64_t> samples;
    std::optional<Batch> ready;
    std::exception_ptr error;
  };

  void worker_loop();
  void stop_workers();
  std::size_t rows_in_epoch() const noexcept;

  DatasetHandle dataset_;
  LoaderConfig config_;
  std::optional<ResolutionSchedule> schedule_;
  std::uint64_t quasi_group_ = 1;

  std::mutex mutex_;
  std::condition_variable work_cv_;
  std::condition_variable ready_cv_;
  std::vector<std::thread> workers_;
  bool started_ = false;
  bool stop_ = false;
  std::uint64_t epoch_ = 0;
  int resolution_ = 0;
  std::vector<ViewPipeline> epoch_pipelines_;
  std::vector<std::uint64_t> plan_;
  std::size_t next_row_ = 0;
  std::uint64_t consumed_ = 0;
  std::vector<Slot> slots_;

  std::atomic<std::int64_t> decode_ns_{0};
  std::atomic<std::int64_t> augment_ns_{0};
  std::atomic<std::int64_t> assembly_ns_{0};
};

struct ThroughputReport {
  std::uint64_t images = 0;
  std::uint64_t batches = 0;
  double wall_seconds = 0.0;
  double images_per_sec = 0.0;
  StageTimes stage_ms;  // summed over workers
  std::size_t num_workers = 0;
  std::size_t views = 0;
};

struct BenchOptions {
  std::uint64_t warmup_batches = 2;  // consumed before timing starts, not counted
  std::uint64_t epochs = 1;
};

// Full passes through the loader with no model attached.
ThroughputReport bench_throughput(const DatasetHandle& dataset, const LoaderConfig& config,
                                  const BenchOptions& options = {});

}  // namespace viewforge
