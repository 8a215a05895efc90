#include <charconv>
#include <map>
#include <sstream>

#include "viewforge/augment.hpp"
#include "viewforge/error.hpp"

namespace viewforge {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double parse_number(std::string_view text, std::string_view key) {
  text = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorCode::ConfigError, "parameter '" + std::string(key) + "': '" + std::string(text) + "' is not a number");
  }
  return value;
}

std::vector<double> parse_list(std::string_view text, std::string_view key) {
  std::vector<double> out;
  for (auto part : split(text, ',')) out.push_back(parse_number(part, key));
  return out;
}

void parse_pair(std::string_view text, std::string_view key, double& lo, double& hi) {
  const auto values = parse_list(text, key);
  if (values.size() == 1) {
    lo = hi = values[0];
  } else if (values.size() == 2) {
    lo = values[0];
    hi = values[1];
  } else {
    fail(ErrorCode::ConfigError, "parameter '" + std::string(key) + "' expects lo,hi");
  }
}

std::string fmt(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string fmt_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += fmt(values[i]);
  }
  return out;
}

using Params = std::map<std::string, std::string, std::less<>>;

class ParamReader {
 public:
  ParamReader(std::string_view stage, Params params) : stage_(stage), params_(std::move(params)) {}

  void number(std::string_view key, double& out) {
    if (auto it = params_.find(key); it != params_.end()) {
      out = parse_number(it->second, key);
      params_.erase(it);
    }
  }
  void integer(std::string_view key, int& out) {
    double v = out;
    number(key, v);
    if (v != static_cast<int>(v)) fail(ErrorCode::ConfigError, "parameter '" + std::string(key) + "' must be an integer");
    out = static_cast<int>(v);
  }
  void pair(std::string_view key, double& lo, double& hi) {
    if (auto it = params_.find(key); it != params_.end()) {
      parse_pair(it->second, key, lo, hi);
      params_.erase(it);
    }
  }
  void list(std::string_view key, std::vector<double>& out) {
    if (auto it = params_.find(key); it != params_.end()) {
      out = parse_list(it->second, key);
      params_.erase(it);
    }
  }
  void finish() const {
    if (!params_.empty()) {
      fail(ErrorCode::ConfigError,
           "stage '" + std::string(stage_) + "' has unknown parameter '" + params_.begin()->first + "'");
    }
  }

 private:
  std::string_view stage_;
  Params params_;
};

AugmentationStage parse_stage(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::string name;
  in >> name;
  Params params;
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos || eq == 0) {
      fail(ErrorCode::ConfigError, "expected key=value in stage '" + name + "', got '" + token + "'");
    }
    params[token.substr(0, eq)] = token.substr(eq + 1);
  }
  ParamReader r(name, std::move(params));
  AugmentationStage stage;
  if (name == "random_resized_crop") {
    RandomResizedCrop s;
    r.pair("scale", s.scale_lo, s.scale_hi);
    r.pair("ratio", s.ratio_lo, s.ratio_hi);
    r.integer("size", s.out_size);
    stage = s;
  } else if (name == "horizontal_flip") {
    HorizontalFlip s;
    r.number("p", s.p);
    stage = s;
  } else if (name == "grayscale") {
    Grayscale s;
    r.number("p", s.p);
    stage = s;
  } else if (name == "color_jitter") {
    ColorJitter s;
    r.number("p", s.p);
    r.number("brightness", s.brightness);
    r.number("contrast", s.contrast);
    r.number("saturation", s.saturation);
    r.number("hue", s.hue);
    stage = s;
  } else if (name == "solarization") {
    Solarization s;
    r.number("p", s.p);
    r.integer("threshold", s.threshold);
    stage = s;
  } else if (name == "gaussian_blur") {
    GaussianBlur s;
    r.number("p", s.p);
    r.pair("sigma", s.sigma_lo, s.sigma_hi);
    stage = s;
  } else if (name == "gaussian_noise") {
    GaussianNoise s;
    r.number("std", s.std);
    stage = s;
  } else if (name == "to_float_normalize") {
    ToFloatNormalize s;
    r.list("mean", s.mean);
    r.list("std", s.std);
    stage = s;
  } else {
    fail(ErrorCode::ConfigError, "unknown stage '" + name + "'");
  }
  r.finish();
  try {
    validate_stage(stage);
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, e.what());
  }
  return stage;
}

}  // namespace

ViewPipeline parse_pipeline(std::string_view text) {
  ViewPipeline pipeline;
  for (auto raw_line : split(text, '\n')) {
    if (const auto hash = raw_line.find('#'); hash != std::string_view::npos) raw_line = raw_line.substr(0, hash);
    for (auto piece : split(raw_line, ';')) {
      piece = trim(piece);
      if (!piece.empty()) pipeline.push_back(parse_stage(piece));
    }
  }
  for (std::size_t i = 0; i + 1 < pipeline.size(); ++i) {
    if (std::holds_alternative<ToFloatNormalize>(pipeline[i])) {
      fail(ErrorCode::ConfigError, "to_float_normalize must be the last stage");
    }
  }
  return pipeline;
}

std::string to_text(const ViewPipeline& pipeline) {
  std::string out;
  for (const auto& stage : pipeline) {
    out += stage_name(stage);
    if (const auto* s = std::get_if<RandomResizedCrop>(&stage)) {
      out += " scale=" + fmt(s->scale_lo) + "," + fmt(s->scale_hi) + " ratio=" + fmt(s->ratio_lo) + "," +
             fmt(s->ratio_hi) + " size=" + std::to_string(s->out_size);
    } else if (const auto* s = std::get_if<HorizontalFlip>(&stage)) {
      out += " p=" + fmt(s->p);
    } else if (const auto* s = std::get_if<Grayscale>(&stage)) {
      out += " p=" + fmt(s->p);
    } else if (const auto* s = std::get_if<ColorJitter>(&stage)) {
      out += " p=" + fmt(s->p) + " brightness=" + fmt(s->brightness) + " contrast=" + fmt(s->contrast) +
             " saturation=" + fmt(s->saturation) + " hue=" + fmt(s->hue);
    } else if (const auto* s = std::get_if<Solarization>(&stage)) {
      out += " p=" + fmt(s->p) + " threshold=" + std::to_string(s->threshold);
    } else if (const auto* s = std::get_if<GaussianBlur>(&stage)) {
      out += " p=" + fmt(s->p) + " sigma=" + fmt(s->sigma_lo) + "," + fmt(s->sigma_hi);
    } else if (const auto* s = std::get_if<GaussianNoise>(&stage)) {
      out += " std=" + fmt(s->std);
    } else if (const auto* s = std::get_if<ToFloatNormalize>(&stage)) {
      if (!s->mean.empty()) out += " mean=" + fmt_list(s->mean) + " std=" + fmt_list(s->std);
    }
    out += '\n';
  }
  return out;
}

}  // namespace viewforge
