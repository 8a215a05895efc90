#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "viewforge/harness/config.hpp"
#include "viewforge/harness/toy_data.hpp"
#include "viewforge/loader.hpp"
#include "viewforge/model.hpp"
#include "viewforge/probe.hpp"
#include "viewforge/trainer.hpp"

namespace viewforge::harness {

// Everything cmd_train needs, resolved from a Config (keys in docs/config.md).
struct TrainSettings {
  Method method = Method::SimClr;
  std::uint64_t steps = 2000;
  std::uint64_t seed = 0;
  std::size_t batch_size = 64;
  std::size_t workers = 1;
  std::size_t prefetch = 2;
  Traversal traversal = Traversal::Random;
  int out_size = 16;
  std::vector<ViewPipeline> view_pipelines;  // pair methods only

  std::vector<int> encoder_widths{128, 64};
  ProjectorSpec projector;
  SgdConfig sgd{0.01, 0.9, 1e-5, 1.0};
  LossConfig loss;
  std::optional<double> ema_momentum;  // probe reads the EMA network when set

  double instance_noise_std = 0.1;
  std::pair<double, double> instance_patch_scale{0.05, 0.2};

  SgdConfig probe_sgd{0.05, 0.9, 0.0};
  std::uint64_t log_every = 0;  // 0: only per-epoch records

  // Data: a packed file (+ optional validation file), or the toy generator.
  std::filesystem::path data_path;
  std::filesystem::path val_path;
  ToyDataOptions toy;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;
};

TrainSettings resolve_train_settings(const Config& config);

struct EpochRecord {
  std::uint64_t epoch = 0;
  std::uint64_t step = 0;  // steps completed at the end of the epoch
  double loss = 0.0;       // mean over the epoch's steps
  double mean_std = 0.0;   // collapse monitor at the last step
  double online_accuracy = 0.0;
  std::optional<double> val_accuracy;
};

struct RunReport {
  std::string run_id = "run";
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> axes;  // sweep grid point, empty for single runs
  std::string status = "ok";                // ok | failed
  std::string error;
  std::uint64_t steps_completed = 0;
  std::vector<EpochRecord> epochs;
  double final_probe_accuracy = 0.0;
  double best_probe_accuracy = 0.0;
  std::uint64_t best_epoch = 0;
  double final_mean_std = 0.0;
  bool collapsed = false;
  double wall_seconds = 0.0;
};

struct RunOptions {
  std::filesystem::path work_dir;            // toy packs go here; empty: a private temp dir
  std::ostream* metrics = nullptr;           // line-delimited JSON StepMetrics
  std::filesystem::path dump_batches;        // binary batch dump, see docs/config.md
  bool timing = true;
};

// Trains per `config`. Errors raised while training (NanLoss included) end the
// run early with status "failed" and the error text; configuration and data
// preparation errors are thrown.
RunReport run_training(const Config& config, const RunOptions& options);

// Prepares the packed training (and validation) files for `settings`,
// generating and packing toy data under `work_dir` when no data path is set.
struct PreparedData {
  DatasetHandle train;
  std::optional<DatasetHandle> val;
};
PreparedData prepare_data(const TrainSettings& settings, const std::filesystem::path& work_dir);

// Writes one batch in the dump format (little-endian):
//   "VFDB" u64 epoch u64 batch_index u32 rows u32 views
//   u32 labels[rows] u64 sample_indices[rows]
//   per view: u32 h u32 w u32 c u8 dtype (0 = u8, 1 = f32) then rows*h*w*c elements
void write_batch_dump(std::ostream& out, const Batch& batch);
std::vector<Batch> read_batch_dump(const std::filesystem::path& path);

}  // namespace viewforge::harness
