#include <chrono>

#include "viewforge/loader.hpp"

namespace viewforge {

ThroughputReport bench_throughput(const DatasetHandle& dataset, const LoaderConfig& config,
                                  const BenchOptions& options) {
  MultiViewLoader loader(dataset, config);

  // Warm-up: touch the mapping and spin up workers on a throwaway epoch.
  if (options.warmup_batches > 0) {
    loader.start_epoch(0);
    for (std::uint64_t i = 0; i < options.warmup_batches; ++i) {
      if (!loader.next_batch()) break;
    }
  }

  ThroughputReport report;
  report.num_workers = config.num_workers;
  report.views = config.view_pipelines.size();
  loader.stop();
  loader.reset_stage_times();
  const auto start = std::chrono::steady_clock::now();
  for (std::uint64_t e = 0; e < options.epochs; ++e) {
    loader.start_epoch(e + 1);
    while (auto batch = loader.next_batch()) {
      report.images += batch->labels.size();
      ++report.batches;
    }
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.images_per_sec = report.wall_seconds > 0 ? report.images / report.wall_seconds : 0.0;
  report.stage_ms = loader.stage_times();
  return report;
}

}  // namespace viewforge
