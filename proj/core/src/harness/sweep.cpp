#include "viewforge/harness/sweep.hpp"

#include <atomic>
#include <fstream>
#include <set>
#include <thread>

#include <json.hpp>

#include "viewforge/error.hpp"
#include "viewforge/harness/reports.hpp"

namespace viewforge::harness {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

SweepAxis axis(std::string key, std::vector<std::string> values) { return SweepAxis{std::move(key), std::move(values)}; }

std::string run_name(std::size_t i) {
  std::string digits = std::to_string(i);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return "run_" + digits;
}

RunReport run_point(const Config& base, const SweepConfig& sweep, const std::map<std::string, std::string>& point,
                    std::size_t index, const fs::path& out_dir, bool timing) {
  const std::string id = run_name(index);
  const fs::path dir = out_dir / id;
  fs::create_directories(dir);
  Config cfg;
  for (const auto& [k, v] : base.values()) {
    if (k.rfind("sweep.", 0) != 0) cfg.set(k, v);
  }
  for (const auto& [k, v] : point) cfg.set(k, v);
  if (sweep.seed_policy == SeedPolicy::Offset) {
    cfg.set("train.seed", std::to_string(base.get_int("train.seed", 0) + static_cast<std::int64_t>(index)));
  }

  RunReport report;
  std::ofstream metrics(dir / "metrics.jsonl", std::ios::binary);
  try {
    RunOptions opts;
    opts.work_dir = dir;
    opts.metrics = &metrics;
    opts.timing = timing;
    report = run_training(cfg, opts);
  } catch (const Error& e) {
    report = RunReport{};
    report.config = cfg.values();
    report.status = "failed";
    report.error = e.what();
  }
  // Toy packs are regenerated on demand; keep only the artifacts.
  std::error_code ec;
  fs::remove(dir / "toy_train.sslp", ec);
  fs::remove(dir / "toy_val.sslp", ec);
  report.run_id = id;
  report.axes = point;
  write_report(dir / "report.json", report, timing);
  return report;
}

}  // namespace

std::vector<std::string> shipped_grid_names() { return {"temperature_lr", "barlow_lambd", "ema", "projector_depth"}; }

std::vector<SweepAxis> shipped_grid(const std::string& name) {
  if (name == "temperature_lr") {
    return {axis("loss.temperature", {"0.10", "0.15", "0.25", "0.5"}),
            axis("train.lr", {"0.3", "0.5", "0.7", "1.0", "1.2", "1.5", "2.0", "2.5", "3.0"})};
  }
  if (name == "barlow_lambd") return {axis("barlow.lambd", {"0.0025", "0.0045", "0.0051", "0.0075", "0.01"})};
  if (name == "ema") return {axis("ema.momentum", {"0.8", "0.9", "0.996"})};
  if (name == "projector_depth") return {axis("model.projector_depth", {"1", "2", "3", "4", "5"})};
  fail(ErrorCode::ConfigError, "unknown sweep grid '" + name + "'");
}

SweepConfig resolve_sweep(const Config& config) {
  SweepConfig s;
  for (const auto& name : split_list(config.get_string("sweep.grid", ""))) {
    for (auto& a : shipped_grid(name)) s.axes.push_back(std::move(a));
  }
  for (const auto& [key, value] : config.section("sweep.axis.")) {
    SweepAxis a{key, split_list(value)};
    if (a.values.empty()) fail(ErrorCode::ConfigError, "sweep axis '" + key + "' has no values");
    s.axes.push_back(std::move(a));
  }
  if (s.axes.empty()) fail(ErrorCode::ConfigError, "sweep needs sweep.grid or at least one sweep.axis.<key>");
  std::set<std::string> seen;
  for (const auto& a : s.axes) {
    if (!seen.insert(a.key).second) fail(ErrorCode::ConfigError, "sweep axis '" + a.key + "' appears twice");
  }
  const std::string policy = config.get_string("sweep.seed_policy", "fixed");
  if (policy == "fixed") s.seed_policy = SeedPolicy::Fixed;
  else if (policy == "offset") s.seed_policy = SeedPolicy::Offset;
  else fail(ErrorCode::ConfigError, "sweep.seed_policy must be fixed or offset");
  const auto parallel = config.get_int("sweep.parallel", 1);
  if (parallel < 1) fail(ErrorCode::ConfigError, "sweep.parallel must be >= 1");
  s.parallel = static_cast<std::size_t>(parallel);
  return s;
}

std::vector<std::map<std::string, std::string>> grid_points(const SweepConfig& sweep) {
  std::vector<std::map<std::string, std::string>> out{{}};
  for (const auto& a : sweep.axes) {
    std::vector<std::map<std::string, std::string>> next;
    for (const auto& p : out) {
      for (const auto& v : a.values) {
        auto q = p;
        q[a.key] = v;
        next.push_back(std::move(q));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::size_t best_run(const std::vector<RunReport>& reports) {
  std::size_t best = reports.size();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (reports[i].status != "ok") continue;
    if (best == reports.size() || reports[i].best_probe_accuracy > reports[best].best_probe_accuracy) best = i;
  }
  return best;
}

SweepResult run_sweep(const Config& base, const SweepConfig& sweep, const fs::path& out_dir, bool timing) {
  const auto points = grid_points(sweep);
  fs::create_directories(out_dir);
  SweepResult result;
  result.reports.resize(points.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      result.reports[i] = run_point(base, sweep, points[i], i, out_dir, timing);
    }
  };
  const std::size_t threads = std::min(sweep.parallel, points.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  result.argmax = best_run(result.reports);

  {
    std::ofstream csv(out_dir / "summary.csv", std::ios::binary);
    csv << reports_csv(result.reports);
  }
  json j;
  json axes = json::array();
  for (const auto& a : sweep.axes) axes.push_back(json{{"key", a.key}, {"values", a.values}});
  j["axes"] = axes;
  j["seed_policy"] = sweep.seed_policy == SeedPolicy::Fixed ? "fixed" : "offset";
  j["runs"] = result.reports.size();
  std::size_t failed = 0;
  for (const auto& r : result.reports) failed += r.status != "ok";
  j["failed"] = failed;
  if (result.argmax < result.reports.size()) {
    const RunReport& best = result.reports[result.argmax];
    j["best"] = json{{"run_id", best.run_id}, {"axes", best.axes}, {"best_probe_accuracy", best.best_probe_accuracy}};
  } else {
    j["best"] = nullptr;
  }
  std::ofstream out(out_dir / "sweep.json", std::ios::binary);
  out << j.dump(2) << "\n";
  return result;
}

}  // namespace viewforge::harness
