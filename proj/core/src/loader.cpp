#include "viewforge/loader.hpp"

#include <chrono>

#include "viewforge/error.hpp"

namespace viewforge {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count();
}

}  // namespace

void validate(const LoaderConfig& config) {
  if (config.batch_size < 1) fail(ErrorCode::InvalidParam, "batch_size must be >= 1");
  if (config.num_workers < 1) fail(ErrorCode::InvalidParam, "num_workers must be >= 1");
  if (config.prefetch_depth < 1) fail(ErrorCode::InvalidParam, "prefetch_depth must be >= 1");
  if (config.view_pipelines.empty()) fail(ErrorCode::InvalidParam, "at least one view pipeline is required");
  for (const auto& pipeline : config.view_pipelines) {
    for (std::size_t i = 0; i < pipeline.size(); ++i) {
      validate_stage(pipeline[i]);
      if (std::holds_alternative<ToFloatNormalize>(pipeline[i]) && i + 1 != pipeline.size()) {
        fail(ErrorCode::InvalidParam, "to_float_normalize can only be the last stage");
      }
    }
  }
}

View make_view(const ImageRecord& img, const ViewPipeline& pipeline, const RngKey& key) {
  if (pipeline.empty()) return img;
  return apply_pipeline(img, pipeline, RngStream(key));
}

Batch assemble_batch(std::vector<std::vector<View>>&& rows, std::vector<std::uint32_t> labels,
                     std::vector<std::uint64_t> sample_indices, std::uint64_t epoch, std::uint64_t batch_index) {
  Batch batch;
  batch.labels = std::move(labels);
  batch.sample_indices = std::move(sample_indices);
  batch.epoch = epoch;
  batch.batch_index = batch_index;
  if (rows.empty()) return batch;
  const std::size_t num_views = rows.front().size();
  batch.views.resize(num_views);
  for (std::size_t v = 0; v < num_views; ++v) {
    ViewTensor& t = batch.views[v];
    t.count = static_cast<int>(rows.size());
    const View& first = rows.front()[v];
    const bool is_float = std::holds_alternative<FloatImage>(first);
    std::visit([&](const auto& img) {
      t.height = img.height;
      t.width = img.width;
      t.channels = img.channels;
    }, first);
    const std::size_t row_size = t.row_size();
    if (is_float) {
      t.data = std::vector<float>(row_size * rows.size());
    } else {
      t.data = std::vector<std::uint8_t>(row_size * rows.size());
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const View& view = rows[r][v];
      bool same = std::holds_alternative<FloatImage>(view) == is_float;
      std::visit([&](const auto& img) {
        same = same && img.height == t.height && img.width == t.width && img.channels == t.channels;
      }, view);
      if (!same) {
        fail(ErrorCode::ShapeMismatch, "view " + std::to_string(v) + " of sample " +
                                           std::to_string(batch.sample_indices[r]) +
                                           " differs in shape from the rest of its batch");
      }
      if (is_float) {
        const auto& src = std::get<FloatImage>(view).values;
        std::copy(src.begin(), src.end(), std::get<std::vector<float>>(t.data).begin() + r * row_size);
      } else {
        const auto& src = std::get<ImageRecord>(view).pixels;
        std::copy(src.begin(), src.end(), std::get<std::vector<std::uint8_t>>(t.data).begin() + r * row_size);
      }
    }
  }
  return batch;
}

MultiViewLoader::MultiViewLoader(DatasetHandle dataset, LoaderConfig config, std::optional<ResolutionSchedule> schedule)
    : dataset_(std::move(dataset)), config_(std::move(config)), schedule_(schedule) {
  validate(config_);
  if (schedule_) resolution_at(*schedule_, 0);
  quasi_group_ = config_.quasi_random_group ? config_.quasi_random_group : default_quasi_random_group(dataset_);
}

MultiViewLoader::~MultiViewLoader() { stop_workers(); }

std::size_t MultiViewLoader::rows_in_epoch() const noexcept {
  const std::size_t n = plan_.size();
  return config_.drop_last ? n / config_.batch_size * config_.batch_size : n;
}

std::size_t MultiViewLoader::batches_per_epoch() const noexcept {
  const std::size_t n = dataset_.sample_count();
  return config_.drop_last ? n / config_.batch_size : (n + config_.batch_size - 1) / config_.batch_size;
}

void MultiViewLoader::stop_workers() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  work_cv_.notify_all();
  for (auto& t : workers_) t.join();
  workers_.clear();
}

void MultiViewLoader::start_epoch(std::uint64_t epoch) {
  stop_workers();
  epoch_ = epoch;
  epoch_pipelines_ = config_.view_pipelines;
  resolution_ = 0;
  if (schedule_) {
    resolution_ = resolution_at(*schedule_, static_cast<std::int64_t>(epoch));
    for (auto& p : epoch_pipelines_) p = with_output_size(std::move(p), resolution_);
  }
  plan_ = build_epoch_plan(dataset_.sample_count(), config_.traversal, config_.seed, epoch, quasi_group_);
  next_row_ = 0;
  consumed_ = 0;
  slots_.assign(config_.prefetch_depth, Slot{});
  stop_ = false;
  started_ = true;
  for (std::size_t i = 0; i < config_.num_workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

void MultiViewLoader::worker_loop() {
  const std::size_t bs = config_.batch_size;
  const std::size_t depth = config_.prefetch_depth;
  const std::size_t total_rows = rows_in_epoch();
  const std::size_t num_views = epoch_pipelines_.size();

  std::unique_lock lock(mutex_);
  while (true) {
    work_cv_.wait(lock, [&] {
      return stop_ || next_row_ >= total_rows || next_row_ / bs < consumed_ + depth;
    });
    if (stop_ || next_row_ >= total_rows) return;

    const std::size_t row = next_row_++;
    const std::uint64_t batch_index = row / bs;
    const std::size_t row_in_batch = row % bs;
    Slot& slot = slots_[batch_index % depth];
    if (row_in_batch == 0) {
      const std::size_t rows = std::min(bs, total_rows - row);
      slot = Slot{};
      slot.batch_index = batch_index;
      slot.remaining = rows;
      slot.rows.resize(rows);
      slot.labels.resize(rows);
      slot.samples.resize(rows);
    }
    const std::uint64_t sample = plan_[row];
    lock.unlock();

    std::vector<View> views;
    std::uint32_t label = 0;
    std::exception_ptr error;
    try {
      const auto t0 = Clock::now();
      ImageRecord img = read_sample(dataset_, sample);
      label = img.label;
      decode_ns_ += elapsed_ns(t0);
      const auto t1 = Clock::now();
      views.reserve(num_views);
      for (std::size_t v = 0; v < num_views; ++v) {
        views.push_back(make_view(img, epoch_pipelines_[v], view_key(config_.seed, epoch_, sample, v)));
      }
      augment_ns_ += elapsed_ns(t1);
    } catch (const Error& e) {
      error = std::make_exception_ptr(Error(e.code(), "sample " + std::to_string(sample) + ": " + e.what()));
    } catch (...) {
      error = std::current_exception();
    }

    lock.lock();
    slot.rows[row_in_batch] = std::move(views);
    slot.labels[row_in_batch] = label;
    slot.samples[row_in_batch] = sample;
    if (error && !slot.error) slot.error = error;
    if (--slot.remaining == 0) {
      if (!slot.error) {
        // Every row of this slot is written; no other worker touches it until it is consumed.
        auto rows = std::move(slot.rows);
        auto labels = std::move(slot.labels);
        auto samples = std::move(slot.samples);
        lock.unlock();
        const auto t2 = Clock::now();
        std::optional<Batch> batch;
        try {
          batch = assemble_batch(std::move(rows), std::move(labels), std::move(samples), epoch_, batch_index);
        } catch (...) {
          error = std::current_exception();
        }
        assembly_ns_ += elapsed_ns(t2);
        lock.lock();
        slot.ready = std::move(batch);
        if (error) slot.error = error;
      }
      ready_cv_.notify_all();
    }
  }
}

std::optional<Batch> MultiViewLoader::next_batch() {
  if (!started_) start_epoch(epoch_);
  const std::size_t total_batches = (rows_in_epoch() + config_.batch_size - 1) / config_.batch_size;
  std::unique_lock lock(mutex_);
  if (consumed_ >= total_batches) return std::nullopt;
  Slot& slot = slots_[consumed_ % config_.prefetch_depth];
  ready_cv_.wait(lock, [&] {
    return slot.batch_index == consumed_ && slot.remaining == 0 && (slot.ready || slot.error);
  });
  std::exception_ptr error = slot.error;
  std::optional<Batch> batch = std::move(slot.ready);
  slot = Slot{};
  slot.batch_index = ~std::uint64_t{0};
  ++consumed_;
  lock.unlock();
  work_cv_.notify_all();
  if (error) std::rethrow_exception(error);
  return batch;
}

StageTimes MultiViewLoader::stage_times() const noexcept {
  return StageTimes{decode_ns_.load() / 1e6, augment_ns_.load() / 1e6, assembly_ns_.load() / 1e6};
}

void MultiViewLoader::reset_stage_times() noexcept {
  decode_ns_ = 0;
  augment_ns_ = 0;
  assembly_ns_ = 0;
}

}  // namespace viewforge
