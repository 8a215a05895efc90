#include "viewforge/harness/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "viewforge/augment.hpp"
#include "viewforge/dataset.hpp"
#include "viewforge/error.hpp"
#include "viewforge/harness/config.hpp"
#include "viewforge/harness/experiment.hpp"
#include "viewforge/harness/image_io.hpp"
#include "viewforge/harness/reports.hpp"
#include "viewforge/harness/sweep.hpp"
#include "viewforge/loader.hpp"

namespace viewforge::harness {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::int64_t> seed;
  std::string out_dir;
  bool no_timing = false;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_out = true) {
  cmd->add_option("--config", a.config_path, "section.key = value config file");
  cmd->add_option("--set", a.overrides, "override a config key (key=value), repeatable");
  cmd->add_option("--seed", a.seed, "overrides train.seed");
  if (with_out) cmd->add_option("--out", a.out_dir, "output directory");
  cmd->add_flag("--no-timing", a.no_timing, "omit wall-clock fields from machine output");
}

std::optional<std::int64_t> env_workers() {
  const char* v = std::getenv("VIEWFORGE_WORKERS");
  if (!v || !*v) return std::nullopt;
  const auto n = parse_int(v, "VIEWFORGE_WORKERS");
  if (n < 1) fail(ErrorCode::ConfigError, "VIEWFORGE_WORKERS must be >= 1");
  return n;
}

Config load_config(const CommonArgs& a) {
  Config c = a.config_path.empty() ? Config{} : Config::load(a.config_path);
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) fail(ErrorCode::ConfigError, "--set expects key=value, got '" + kv + "'");
    const Config one = Config::parse(kv);
    for (const auto& [k, v] : one.values()) c.set(k, v);
  }
  if (a.seed) c.set("train.seed", std::to_string(*a.seed));
  if (const auto w = env_workers()) c.set("loader.workers", std::to_string(*w));
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot write " + path.string());
  f << text;
}

std::string_view encoding_name(EncodingMode m) { return m == EncodingMode::Jpeg ? "jpeg" : "raw"; }

int cmd_pack(const std::string& input, const std::string& output, const std::string& encoding, int quality,
             std::ostream& out) {
  PackOptions opts;
  if (encoding == "jpeg") opts.encoding_mode = EncodingMode::Jpeg;
  else if (encoding != "raw") fail(ErrorCode::ConfigError, "--encoding must be raw or jpeg");
  opts.jpeg_quality = quality;
  std::error_code ec;
  const fs::path in(input);
  std::vector<LabeledPath> files;
  if (fs::is_directory(in, ec)) files = list_image_directory(in);
  else if (fs::is_regular_file(in, ec)) files = read_manifest(in);
  else fail(ErrorCode::IoError, "input '" + input + "' is neither a directory nor a manifest");
  const auto images = load_images(files);
  const PackSummary s = pack_dataset(images, opts, output);
  out << json{{"path", output}, {"count", s.sample_count}, {"bytes", s.file_bytes}, {"mode", encoding_name(s.encoding_mode)}}
             .dump()
      << "\n";
  return kExitOk;
}

int cmd_inspect(const std::string& path, bool verify, std::ostream& out) {
  const DatasetHandle ds = open_dataset(path);
  const DatasetHeader& h = ds.header();
  json j{{"path", path},
         {"format_version", h.format_version},
         {"count", h.sample_count},
         {"mode", encoding_name(h.encoding_mode)},
         {"channels", h.channels},
         {"max_height", h.max_height},
         {"max_width", h.max_width},
         {"descriptor_table_offset", h.descriptor_table_offset},
         {"data_region_offset", h.data_region_offset},
         {"bytes", ds.file_size()}};
  bool ok = true;
  if (verify) {
    const ValidationReport v = validate(ds);
    ok = v.ok();
    j["validation"] = json{{"ok", ok},
                           {"samples_checked", v.samples_checked},
                           {"checksum_failures", v.checksum_failures},
                           {"failed_indices", v.failed_indices},
                           {"data_region_aligned", v.data_region_aligned},
                           {"descriptor_violations", v.descriptor_violations}};
  }
  out << j.dump(2) << "\n";
  return ok ? kExitOk : kExitRunFailure;
}

int cmd_bench(const CommonArgs& a, const std::string& format, std::ostream& out) {
  const Config c = load_config(a);
  const std::string data = c.require_string("data.path");
  const DatasetHandle ds = open_dataset(data);

  std::vector<std::string> presets = bench_preset_names();
  if (c.has("bench.presets")) presets = split_list(c.get_string("bench.presets", ""));
  std::vector<int> workers = c.get_ints("bench.workers", {1});
  if (const auto w = env_workers()) workers = {static_cast<int>(*w)};
  const auto batch = c.get_int("bench.batch_size", c.get_int("loader.batch_size", 64));
  const int out_size = static_cast<int>(c.get_int("bench.out_size", 32));
  const auto views = c.get_int("bench.views", 2);
  BenchOptions bo;
  bo.epochs = static_cast<std::uint64_t>(c.get_int("bench.epochs", 1));
  bo.warmup_batches = static_cast<std::uint64_t>(c.get_int("bench.warmup", 2));
  if (presets.empty() || workers.empty() || batch < 1 || views < 1 || bo.epochs < 1) {
    fail(ErrorCode::ConfigError, "bench needs presets, workers, bench.batch_size, bench.views and bench.epochs >= 1");
  }

  struct Row {
    std::string preset;
    int workers;
    ThroughputReport r;
  };
  std::vector<Row> rows;
  for (int w : workers) {
    if (w < 1) fail(ErrorCode::ConfigError, "bench.workers entries must be >= 1");
    for (const auto& p : presets) {
      LoaderConfig lc;
      lc.batch_size = static_cast<std::size_t>(batch);
      lc.num_workers = static_cast<std::size_t>(w);
      lc.seed = static_cast<std::uint64_t>(c.get_int("train.seed", 0));
      lc.traversal = parse_traversal(c.get_string("loader.traversal", "random"));
      lc.view_pipelines.assign(static_cast<std::size_t>(views), preset_pipeline(p, out_size));
      rows.push_back(Row{p, w, bench_throughput(ds, lc, bo)});
    }
  }

  const bool timing = !a.no_timing;
  json j;
  j["config"] = c.values();
  j["presets"] = presets;
  j["workers"] = workers;
  json results = json::array();
  for (const auto& row : rows) {
    json r{{"preset", row.preset}, {"workers", row.workers}, {"images", row.r.images}, {"batches", row.r.batches}};
    if (timing) {
      r["wall_seconds"] = row.r.wall_seconds;
      r["images_per_sec"] = row.r.images_per_sec;
      r["decode_ms"] = row.r.stage_ms.decode_ms;
      r["augment_ms"] = row.r.stage_ms.augment_ms;
      r["assembly_ms"] = row.r.stage_ms.assembly_ms;
    }
    results.push_back(r);
  }
  j["results"] = results;
  const std::string text = j.dump(2) + "\n";
  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    write_text(fs::path(a.out_dir) / "bench.json", text);
  }

  if (format == "json") {
    out << text;
  } else {
    out << std::left << std::setw(10) << "workers";
    for (const auto& p : presets) out << std::right << std::setw(12) << p;
    out << "   (images/sec; augment ms)\n";
    for (int w : workers) {
      out << std::left << std::setw(10) << w;
      for (const auto& row : rows) {
        if (row.workers != w) continue;
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(0) << row.r.images_per_sec;
        out << std::right << std::setw(12) << (timing ? cell.str() : "-");
      }
      out << "\n" << std::left << std::setw(10) << "";
      for (const auto& row : rows) {
        if (row.workers != w) continue;
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(1) << row.r.stage_ms.augment_ms;
        out << std::right << std::setw(12) << (timing ? cell.str() : "-");
      }
      out << "\n";
    }
  }
  return kExitOk;
}

int cmd_train(const CommonArgs& a, const std::string& dump_batches, std::ostream& out, std::ostream& err) {
  const Config c = load_config(a);
  RunOptions opts;
  opts.timing = !a.no_timing;
  opts.dump_batches = dump_batches;
  std::ofstream metrics;
  fs::path dir;
  if (!a.out_dir.empty()) {
    dir = a.out_dir;
    fs::create_directories(dir);
    metrics.open(dir / "metrics.jsonl", std::ios::binary);
    if (!metrics) fail(ErrorCode::IoError, "cannot write " + (dir / "metrics.jsonl").string());
    opts.metrics = &metrics;
    write_text(dir / "config.txt", c.to_text());
  }
  const RunReport report = run_training(c, opts);
  const std::string text = report_to_json(report, opts.timing);
  if (!dir.empty()) write_text(dir / "report.json", text);
  out << text;
  if (report.status != "ok") {
    err << "viewforge train: run failed after " << report.steps_completed << " steps: " << report.error << "\n";
    return kExitRunFailure;
  }
  if (report.collapsed) err << "viewforge train: warning: embeddings collapsed (mean std " << report.final_mean_std << ")\n";
  return kExitOk;
}

int cmd_sweep(const CommonArgs& a, const std::string& grid, std::ostream& out) {
  Config c = load_config(a);
  if (!grid.empty()) c.set("sweep.grid", grid);
  if (a.out_dir.empty()) fail(ErrorCode::ConfigError, "sweep needs --out DIR");
  const SweepConfig sweep = resolve_sweep(c);
  const SweepResult result = run_sweep(c, sweep, a.out_dir, !a.no_timing);
  std::ifstream summary(fs::path(a.out_dir) / "sweep.json", std::ios::binary);
  out << summary.rdbuf();
  return result.argmax < result.reports.size() ? kExitOk : kExitRunFailure;
}

int cmd_report(const std::string& dir, const std::string& out_dir, const std::string& format, std::ostream& out) {
  const auto reports = load_reports(dir);
  const std::string csv = reports_csv(reports);
  const std::string series = reports_series_json(reports);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "report.csv", csv);
    write_text(fs::path(out_dir) / "series.json", series);
  }
  out << (format == "json" ? series : csv);
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidParam:
    case ErrorCode::IoError:
      return kExitUsage;
    default:
      return kExitRunFailure;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"viewforge: packed multi-view datasets, SSL losses and a desk-scale training harness", "viewforge"};
  app.require_subcommand(1);

  std::string pack_in, pack_out, pack_encoding = "raw";
  int pack_quality = 90;
  auto* pack = app.add_subcommand("pack", "pack an image directory or manifest into one file");
  pack->add_option("input", pack_in, "directory of images or a `path label` manifest")->required();
  pack->add_option("output", pack_out, "packed file to write")->required();
  pack->add_option("--encoding", pack_encoding, "raw or jpeg");
  pack->add_option("--quality", pack_quality, "JPEG quality 1..100");

  std::string inspect_path;
  bool no_verify = false;
  auto* inspect = app.add_subcommand("inspect", "print the header and validate checksums");
  inspect->add_option("path", inspect_path, "packed file")->required();
  inspect->add_flag("--no-verify", no_verify, "skip checksum validation");

  CommonArgs bench_args, train_args, sweep_args;
  std::string bench_format = "table";
  auto* bench = app.add_subcommand("bench", "loader throughput per augmentation preset");
  add_common(bench, bench_args);
  bench->add_option("--format", bench_format, "table or json")->check(CLI::IsMember({"table", "json"}));

  std::string dump_batches;
  auto* train = app.add_subcommand("train", "train one model with an online probe");
  add_common(train, train_args);
  train->add_option("--dump-batches", dump_batches, "write every loader batch to this file");

  std::string grid;
  auto* sweep = app.add_subcommand("sweep", "run a hyperparameter grid");
  add_common(sweep, sweep_args);
  sweep->add_option("--grid", grid, "shipped grid name(s), comma-separated");

  std::string report_dir, report_out, report_format = "csv";
  auto* report = app.add_subcommand("report", "aggregate run reports into CSV and JSON series");
  report->add_option("dir", report_dir, "directory holding report.json files")->required();
  report->add_option("--out", report_out, "write report.csv and series.json here");
  report->add_option("--format", report_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "viewforge: " << e.what() << "\n" << "run 'viewforge --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (*pack) return cmd_pack(pack_in, pack_out, pack_encoding, pack_quality, out);
    if (*inspect) return cmd_inspect(inspect_path, !no_verify, out);
    if (*bench) return cmd_bench(bench_args, bench_format, out);
    if (*train) return cmd_train(train_args, dump_batches, out, err);
    if (*sweep) return cmd_sweep(sweep_args, grid, out);
    if (*report) return cmd_report(report_dir, report_out, report_format, out);
  } catch (const Error& e) {
    err << "viewforge: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "viewforge: " << e.what() << "\n";
    return kExitRunFailure;
  }
  return kExitUsage;
}

}  // namespace viewforge::harness
