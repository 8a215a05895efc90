#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "viewforge/harness/config.hpp"
#include "viewforge/harness/experiment.hpp"

namespace viewforge::harness {

// One config key and the values it takes across the grid.
struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

enum class SeedPolicy {
  Fixed,   // every run uses train.seed
  Offset,  // run i uses train.seed + i
};

struct SweepConfig {
  std::vector<SweepAxis> axes;  // first axis varies slowest
  SeedPolicy seed_policy = SeedPolicy::Fixed;
  std::size_t parallel = 1;     // concurrent independent runs
};

// Names accepted by `sweep.grid`: temperature_lr, barlow_lambd, ema, projector_depth.
std::vector<std::string> shipped_grid_names();
std::vector<SweepAxis> shipped_grid(const std::string& name);

// Axes from `sweep.grid` (comma-separated shipped grid names) followed by
// `sweep.axis.<config key> = v1, v2, ...`, plus `sweep.seed_policy` and
// `sweep.parallel`. Throws ConfigError on empty axes, duplicate keys, or an
// empty grid.
SweepConfig resolve_sweep(const Config& config);

// Cartesian product, row-major over the axes.
std::vector<std::map<std::string, std::string>> grid_points(const SweepConfig& sweep);

struct SweepResult {
  std::vector<RunReport> reports;  // grid order
  // Index of the best ok run by best_probe_accuracy; ties go to the lowest
  // index. Equal to reports.size() when every run failed.
  std::size_t argmax = 0;
};

std::size_t best_run(const std::vector<RunReport>& reports);

// Runs every grid point. Each run writes <out_dir>/run_NNNN/{report.json,
// metrics.jsonl}; the sweep writes summary.csv and sweep.json. Run failures,
// including config errors at a grid point, are recorded and the sweep
// continues.
SweepResult run_sweep(const Config& base, const SweepConfig& sweep, const std::filesystem::path& out_dir,
                      bool timing);

}  // namespace viewforge::harness
