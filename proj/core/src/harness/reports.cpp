#include "viewforge/harness/reports.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "viewforge/error.hpp"

namespace viewforge::harness {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::optional<double> as_number(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Numbers before text; numbers by value; text lexicographically.
bool value_less(const std::string& a, const std::string& b) {
  const auto na = as_number(a), nb = as_number(b);
  if (na && nb) return *na < *nb;
  if (na != nb && (na || nb)) return static_cast<bool>(na);
  return a < b;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> axis_names(const std::vector<RunReport>& reports) {
  std::set<std::string> names;
  for (const auto& r : reports) {
    for (const auto& [k, v] : r.axes) names.insert(k);
  }
  return {names.begin(), names.end()};
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

std::string report_to_json(const RunReport& r, bool timing) {
  json j;
  j["run_id"] = r.run_id;
  j["status"] = r.status;
  if (!r.error.empty()) j["error"] = r.error;
  j["axes"] = r.axes;
  j["config"] = r.config;
  j["steps_completed"] = r.steps_completed;
  j["final_probe_accuracy"] = r.final_probe_accuracy;
  j["best_probe_accuracy"] = r.best_probe_accuracy;
  j["best_epoch"] = r.best_epoch;
  j["final_mean_std"] = r.final_mean_std;
  j["collapsed"] = r.collapsed;
  if (timing) j["wall_seconds"] = r.wall_seconds;
  json epochs = json::array();
  for (const auto& e : r.epochs) {
    json je{{"epoch", e.epoch}, {"step", e.step}, {"loss", e.loss}, {"mean_std", e.mean_std},
            {"online_accuracy", e.online_accuracy}};
    if (e.val_accuracy) je["val_accuracy"] = *e.val_accuracy;
    epochs.push_back(je);
  }
  j["epochs"] = epochs;
  return j.dump(2) + "\n";
}

RunReport report_from_json(std::string_view text) {
  RunReport r;
  try {
    const json j = json::parse(text);
    r.run_id = j.at("run_id").get<std::string>();
    r.status = j.at("status").get<std::string>();
    r.error = j.value("error", "");
    r.axes = j.at("axes").get<std::map<std::string, std::string>>();
    r.config = j.at("config").get<std::map<std::string, std::string>>();
    r.steps_completed = j.at("steps_completed").get<std::uint64_t>();
    r.final_probe_accuracy = j.at("final_probe_accuracy").get<double>();
    r.best_probe_accuracy = j.at("best_probe_accuracy").get<double>();
    r.best_epoch = j.at("best_epoch").get<std::uint64_t>();
    r.final_mean_std = j.at("final_mean_std").get<double>();
    r.collapsed = j.at("collapsed").get<bool>();
    r.wall_seconds = j.value("wall_seconds", 0.0);
    for (const auto& je : j.at("epochs")) {
      EpochRecord e;
      e.epoch = je.at("epoch").get<std::uint64_t>();
      e.step = je.at("step").get<std::uint64_t>();
      e.loss = je.at("loss").get<double>();
      e.mean_std = je.at("mean_std").get<double>();
      e.online_accuracy = je.at("online_accuracy").get<double>();
      if (je.contains("val_accuracy")) e.val_accuracy = je.at("val_accuracy").get<double>();
      r.epochs.push_back(e);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, std::string("malformed run report: ") + e.what());
  }
  return r;
}

void write_report(const fs::path& path, const RunReport& report, bool timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << report_to_json(report, timing);
}

std::vector<RunReport> load_reports(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorCode::IoError, dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "report.json") files.push_back(entry.path());
  }
  if (files.empty()) fail(ErrorCode::ExitEmpty, "no report.json under " + dir.string());
  std::sort(files.begin(), files.end());
  std::vector<RunReport> out;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out.push_back(report_from_json(ss.str()));
  }
  return out;
}

std::vector<RunReport> sorted_by_axes(std::vector<RunReport> reports) {
  const auto names = axis_names(reports);
  std::stable_sort(reports.begin(), reports.end(), [&](const RunReport& a, const RunReport& b) {
    for (const auto& n : names) {
      const auto ia = a.axes.find(n), ib = b.axes.find(n);
      const std::string va = ia == a.axes.end() ? "" : ia->second;
      const std::string vb = ib == b.axes.end() ? "" : ib->second;
      if (value_less(va, vb)) return true;
      if (value_less(vb, va)) return false;
    }
    return a.run_id < b.run_id;
  });
  return reports;
}

std::string reports_csv(const std::vector<RunReport>& reports) {
  const auto names = axis_names(reports);
  std::string out = "run_id";
  for (const auto& n : names) out += "," + csv_field(n);
  out += ",status,steps_completed,final_probe_accuracy,best_probe_accuracy,best_epoch,final_mean_std,collapsed\n";
  for (const auto& r : sorted_by_axes(reports)) {
    out += csv_field(r.run_id);
    for (const auto& n : names) {
      const auto it = r.axes.find(n);
      out += "," + csv_field(it == r.axes.end() ? "" : it->second);
    }
    out += "," + r.status + "," + std::to_string(r.steps_completed) + "," + format_double(r.final_probe_accuracy) + "," +
           format_double(r.best_probe_accuracy) + "," + std::to_string(r.best_epoch) + "," +
           format_double(r.final_mean_std) + "," + (r.collapsed ? "true" : "false") + "\n";
  }
  return out;
}

std::string reports_series_json(const std::vector<RunReport>& reports) {
  const auto names = axis_names(reports);
  json j;
  json runs = json::array();
  for (const auto& r : sorted_by_axes(reports)) {
    runs.push_back(json{{"run_id", r.run_id}, {"axes", r.axes}, {"status", r.status},
                        {"best_probe_accuracy", r.best_probe_accuracy},
                        {"final_probe_accuracy", r.final_probe_accuracy}, {"final_mean_std", r.final_mean_std}});
  }
  j["runs"] = runs;
  json series = json::object();
  for (const auto& n : names) {
    std::vector<const RunReport*> points;
    for (const auto& r : reports) {
      if (r.axes.count(n)) points.push_back(&r);
    }
    std::stable_sort(points.begin(), points.end(), [&](const RunReport* a, const RunReport* b) {
      const auto& va = a->axes.at(n);
      const auto& vb = b->axes.at(n);
      if (value_less(va, vb)) return true;
      if (value_less(vb, va)) return false;
      return a->run_id < b->run_id;
    });
    json s = json::array();
    for (const RunReport* r : points) {
      const auto& v = r->axes.at(n);
      json x = as_number(v) ? json(*as_number(v)) : json(v);
      s.push_back(json{{"x", x}, {"run_id", r->run_id}, {"best_probe_accuracy", r->best_probe_accuracy},
                       {"final_probe_accuracy", r->final_probe_accuracy}, {"final_mean_std", r->final_mean_std},
                       {"status", r->status}});
    }
    series[n] = s;
  }
  j["series"] = series;
  return j.dump(2) + "\n";
}

}  // namespace viewforge::harness
