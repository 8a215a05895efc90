#include "viewforge/harness/experiment.hpp"

#include <chrono>
#include <cstring>
#include <fstream>
#include <ostream>
#include <random>

#include <json.hpp>

#include "viewforge/error.hpp"
#include "viewforge/instance_batch.hpp"

namespace viewforge::harness {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// View id under which instance batches draw, above any pipeline view index.
constexpr std::uint64_t kInstanceView = 0x1457'0000ull;

std::string default_view_pipeline(int out_size) {
  return "random_resized_crop scale=0.5,1 size=" + std::to_string(out_size) + "; gaussian_noise std=0.05";
}

Matrix images_matrix(const std::vector<ImageRecord>& images) {
  Matrix out(static_cast<Eigen::Index>(images.size()), static_cast<Eigen::Index>(images.front().pixels.size()));
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t k = 0; k < images[i].pixels.size(); ++k) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = images[i].pixels[k] / 255.0;
    }
  }
  return out;
}

struct ValSet {
  Matrix x;
  std::vector<std::uint32_t> labels;
};

ValSet load_val(const DatasetHandle& ds, int out_size) {
  std::vector<ImageRecord> images;
  ValSet v;
  for (std::uint64_t i = 0; i < ds.sample_count(); ++i) {
    ImageRecord img = read_sample(ds, i);
    v.labels.push_back(img.label);
    images.push_back(resize_bilinear(img, out_size, out_size));
  }
  v.x = images_matrix(images);
  return v;
}

std::vector<Matrix> instance_views(const Batch& raw, const TrainSettings& s) {
  const ViewTensor& t = raw.views.at(0);
  std::vector<std::vector<ImageRecord>> per_view(3);
  for (int r = 0; r < t.count; ++r) {
    ImageRecord img(t.height, t.width, t.channels, raw.labels[static_cast<std::size_t>(r)]);
    std::memcpy(img.pixels.data(), t.bytes().data() + static_cast<std::size_t>(r) * t.row_size(), t.row_size());
    const RngStream rng(view_key(s.seed, raw.epoch, raw.sample_indices[static_cast<std::size_t>(r)], kInstanceView));
    InstanceBatch ib = build_instance_batch(img, s.instance_noise_std, s.instance_patch_scale, s.out_size, rng);
    for (int v = 0; v < 3; ++v) per_view[static_cast<std::size_t>(v)].push_back(std::move(ib.views[static_cast<std::size_t>(v)]));
  }
  std::vector<Matrix> out;
  for (const auto& images : per_view) out.push_back(images_matrix(images));
  return out;
}

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) fail(ErrorCode::FormatError, "truncated batch dump");
  return v;
}

json step_record(const StepMetrics& m, const ProbeStepResult& p) {
  json j;
  j["step"] = m.step;
  j["loss"] = m.loss;
  j["terms"] = m.terms;
  j["embedding_std"] = m.embedding_std;
  j["mean_std"] = m.mean_std;
  j["collapsed"] = m.collapsed;
  j["probe_ce"] = p.ce_loss;
  j["probe_accuracy"] = p.accuracy;
  j["probe_running_accuracy"] = p.running_accuracy;
  return j;
}

}  // namespace

TrainSettings resolve_train_settings(const Config& c) {
  TrainSettings s;
  s.method = parse_method(c.get_string("train.method", "simclr"));
  const auto steps = c.get_int("train.steps", 2000);
  if (steps < 1) fail(ErrorCode::ConfigError, "train.steps must be >= 1");
  s.steps = static_cast<std::uint64_t>(steps);
  s.seed = static_cast<std::uint64_t>(c.get_int("train.seed", 0));
  const auto bs = c.get_int("loader.batch_size", 64);
  const auto workers = c.get_int("loader.workers", 1);
  const auto prefetch = c.get_int("loader.prefetch", 2);
  if (bs < 2 || workers < 1 || prefetch < 1) {
    fail(ErrorCode::ConfigError, "loader.batch_size must be >= 2, loader.workers and loader.prefetch >= 1");
  }
  s.batch_size = static_cast<std::size_t>(bs);
  s.workers = static_cast<std::size_t>(workers);
  s.prefetch = static_cast<std::size_t>(prefetch);
  s.traversal = parse_traversal(c.get_string("loader.traversal", "random"));
  s.out_size = static_cast<int>(c.get_int("augment.out_size", 16));
  if (s.out_size < 1) fail(ErrorCode::ConfigError, "augment.out_size must be >= 1");
  for (int v = 0; v < 2; ++v) {
    const std::string key = "augment.view" + std::to_string(v);
    s.view_pipelines.push_back(parse_pipeline(c.get_string(key, default_view_pipeline(s.out_size))));
  }

  s.encoder_widths = c.get_ints("model.encoder", s.encoder_widths);
  if (s.encoder_widths.empty()) fail(ErrorCode::ConfigError, "model.encoder needs at least one width");
  s.projector.depth = static_cast<int>(c.get_int("model.projector_depth", 2));
  s.projector.output_width = static_cast<int>(c.get_int("model.projector_out", 32));
  if (s.projector.depth > 1) {
    if (!c.has("model.projector_hidden")) {
      fail(ErrorCode::ConfigError, "model.projector_hidden is required when model.projector_depth > 1");
    }
    s.projector.hidden_width = static_cast<int>(c.get_int("model.projector_hidden", 0));
  }

  double lr = c.get_double("train.lr", s.sgd.lr);
  const std::string scaling = c.get_string("train.lr_scaling", "none");
  if (scaling == "linear") lr *= static_cast<double>(s.batch_size) / 256.0;
  else if (scaling != "none") fail(ErrorCode::ConfigError, "train.lr_scaling must be none or linear");
  s.sgd = SgdConfig{lr, c.get_double("train.momentum", s.sgd.momentum),
                    c.get_double("train.weight_decay", s.sgd.weight_decay),
                    c.get_double("train.clip_norm", s.sgd.clip_norm)};

  s.loss.simclr.tau = c.get_double("loss.temperature", s.loss.simclr.tau);
  const std::string reduction = c.get_string("loss.reduction", "mean");
  if (reduction == "sum") s.loss.simclr.reduction = SimClrReduction::Sum;
  else if (reduction == "mean") s.loss.simclr.reduction = SimClrReduction::MeanOverPositives;
  else fail(ErrorCode::ConfigError, "loss.reduction must be sum or mean");
  s.loss.vicreg.alpha = c.get_double("vicreg.alpha", s.loss.vicreg.alpha);
  s.loss.vicreg.beta = c.get_double("vicreg.beta", s.loss.vicreg.beta);
  s.loss.vicreg.gamma = c.get_double("vicreg.gamma", s.loss.vicreg.gamma);
  s.loss.vicreg.epsilon = c.get_double("vicreg.epsilon", s.loss.vicreg.epsilon);
  s.loss.barlow.alpha = c.get_double("barlow.lambd", s.loss.barlow.alpha);
  if (c.has("ema.momentum")) s.ema_momentum = c.get_double("ema.momentum", 0.0);

  s.instance_noise_std = c.get_double("instance.noise_std", s.instance_noise_std);
  const auto patch = c.get_doubles("instance.patch_scale", {s.instance_patch_scale.first, s.instance_patch_scale.second});
  if (patch.size() != 2) fail(ErrorCode::ConfigError, "instance.patch_scale needs two values");
  s.instance_patch_scale = {patch[0], patch[1]};

  s.probe_sgd.lr = c.get_double("probe.lr", s.probe_sgd.lr);
  s.probe_sgd.momentum = c.get_double("probe.momentum", s.probe_sgd.momentum);
  s.log_every = static_cast<std::uint64_t>(c.get_int("train.log_every", 0));

  s.data_path = c.get_string("data.path", "");
  s.val_path = c.get_string("data.val_path", "");
  s.toy.samples = static_cast<int>(c.get_int("toy.samples", s.toy.samples));
  s.toy.size = static_cast<int>(c.get_int("toy.size", s.toy.size));
  s.toy.classes = static_cast<int>(c.get_int("toy.classes", s.toy.classes));
  s.toy.blobs_per_class = static_cast<int>(c.get_int("toy.blobs", s.toy.blobs_per_class));
  s.toy.pixel_noise = c.get_double("toy.noise", s.toy.pixel_noise);
  s.toy.background_jitter = c.get_double("toy.background_jitter", s.toy.background_jitter);
  s.toy.seed = static_cast<std::uint64_t>(c.get_int("toy.seed", 0));
  s.train_fraction = c.get_double("split.train_fraction", s.train_fraction);
  s.split_seed = static_cast<std::uint64_t>(c.get_int("split.seed", 0));
  return s;
}

PreparedData prepare_data(const TrainSettings& s, const fs::path& work_dir) {
  PreparedData data;
  if (!s.data_path.empty()) {
    data.train = open_dataset(s.data_path);
    if (!s.val_path.empty()) data.val = open_dataset(s.val_path);
    return data;
  }
  const auto images = make_toy_images(s.toy);
  const Split split = split_indices(images.size(), s.train_fraction, s.split_seed);
  std::vector<ImageRecord> train, val;
  for (auto i : split.train) train.push_back(images[i]);
  for (auto i : split.val) val.push_back(images[i]);
  fs::create_directories(work_dir);
  const fs::path train_path = work_dir / "toy_train.sslp";
  const fs::path val_path = work_dir / "toy_val.sslp";
  pack_dataset(train, PackOptions{}, train_path);
  pack_dataset(val, PackOptions{}, val_path);
  data.train = open_dataset(train_path);
  data.val = open_dataset(val_path);
  return data;
}

RunReport run_training(const Config& config, const RunOptions& options) {
  const TrainSettings s = resolve_train_settings(config);
  RunReport report;
  report.config = config.values();

  fs::path work_dir = options.work_dir;
  bool remove_work_dir = false;
  if (work_dir.empty() && s.data_path.empty()) {
    std::random_device rd;
    work_dir = fs::temp_directory_path() / ("viewforge-" + std::to_string(rd()) + std::to_string(rd()));
    remove_work_dir = true;
  }
  PreparedData data = prepare_data(s, work_dir);
  if (remove_work_dir) fs::remove_all(work_dir);

  std::optional<ValSet> val;
  if (data.val) val = load_val(*data.val, s.out_size);

  LoaderConfig lc;
  lc.batch_size = s.batch_size;
  lc.num_workers = s.workers;
  lc.prefetch_depth = s.prefetch;
  lc.traversal = s.traversal;
  lc.seed = s.seed;
  lc.drop_last = true;
  lc.view_pipelines = s.method == Method::InstanceSimClr ? std::vector<ViewPipeline>{ViewPipeline{}} : s.view_pipelines;
  if (data.train.sample_count() < s.batch_size) {
    fail(ErrorCode::ConfigError, "training set has fewer samples than loader.batch_size");
  }
  MultiViewLoader loader(data.train, lc);

  EncoderSpec enc;
  enc.input_dim = s.out_size * s.out_size * static_cast<int>(data.train.header().channels);
  for (int w : s.encoder_widths) enc.layers.push_back({w, true});
  TrainState state{make_network(enc, s.projector, s.seed), SgdOptimizer(s.sgd), 0};
  std::optional<Network> target;
  if (s.ema_momentum) target = state.net;

  std::uint32_t max_label = 0;
  for (std::uint64_t i = 0; i < data.train.sample_count(); ++i) max_label = std::max(max_label, data.train.descriptor(i).label);
  ProbeSpec ps;
  ps.kind = ProbeKind::Linear;
  ps.mode = ProbeMode::Online;
  ps.num_classes = static_cast<int>(std::max<std::uint32_t>(max_label + 1, 2));
  Probe probe(ps, state.net.rep_dim(), s.probe_sgd, s.seed);

  std::ofstream dump;
  if (!options.dump_batches.empty()) {
    dump.open(options.dump_batches, std::ios::binary);
    if (!dump) fail(ErrorCode::IoError, "cannot write " + options.dump_batches.string());
  }

  const auto t0 = std::chrono::steady_clock::now();
  StepMetrics last;
  try {
    for (std::uint64_t epoch = 0; state.step < s.steps; ++epoch) {
      loader.start_epoch(epoch);
      probe.reset_running();
      double loss_sum = 0.0;
      std::uint64_t epoch_steps = 0;
      while (state.step < s.steps) {
        auto batch = loader.next_batch();
        if (!batch) break;
        if (dump.is_open()) write_batch_dump(dump, *batch);
        const std::vector<Matrix> views =
            s.method == Method::InstanceSimClr ? instance_views(*batch, s) : view_matrices(*batch);
        std::vector<Matrix> reps;
        last = train_step(s.method, views, state, s.loss, &reps);
        if (target) ema_update(*target, state.net, *s.ema_momentum);
        const Matrix h = target ? target->encoder().forward(views[0]) : reps[0];
        const ProbeStepResult p = online_probe_step(h, batch->labels, probe);
        loss_sum += last.loss;
        ++epoch_steps;
        if (options.metrics && s.log_every && state.step % s.log_every == 0) {
          *options.metrics << step_record(last, p).dump() << "\n";
        }
      }
      EpochRecord rec;
      rec.epoch = epoch;
      rec.step = state.step;
      rec.loss = epoch_steps ? loss_sum / static_cast<double>(epoch_steps) : 0.0;
      rec.mean_std = last.mean_std;
      rec.online_accuracy = probe.running_accuracy();
      if (val) {
        const Matrix h = (target ? *target : state.net).encoder().forward(val->x);
        rec.val_accuracy = accuracy(probe.predict(h), val->labels);
      }
      const double acc = rec.val_accuracy.value_or(rec.online_accuracy);
      if (report.epochs.empty() || acc > report.best_probe_accuracy) {
        report.best_probe_accuracy = acc;
        report.best_epoch = epoch;
      }
      report.final_probe_accuracy = acc;
      report.epochs.push_back(rec);
      if (options.metrics) {
        json j{{"epoch", rec.epoch}, {"step", rec.step}, {"loss", rec.loss}, {"mean_std", rec.mean_std},
               {"online_accuracy", rec.online_accuracy}};
        if (rec.val_accuracy) j["val_accuracy"] = *rec.val_accuracy;
        *options.metrics << j.dump() << "\n";
      }
    }
  } catch (const Error& e) {
    report.status = "failed";
    report.error = e.what();
  }
  loader.stop();
  report.steps_completed = state.step;
  report.final_mean_std = last.mean_std;
  report.collapsed = state.step > 0 && last.collapsed;
  if (options.timing) report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

void write_batch_dump(std::ostream& out, const Batch& b) {
  out.write("VFDB", 4);
  put<std::uint64_t>(out, b.epoch);
  put<std::uint64_t>(out, b.batch_index);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(b.labels.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(b.views.size()));
  for (auto l : b.labels) put<std::uint32_t>(out, l);
  for (auto i : b.sample_indices) put<std::uint64_t>(out, i);
  for (const auto& v : b.views) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(v.height));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(v.width));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(v.channels));
    put<std::uint8_t>(out, v.is_float() ? 1 : 0);
    if (v.is_float()) {
      out.write(reinterpret_cast<const char*>(v.floats().data()), static_cast<std::streamsize>(v.floats().size() * sizeof(float)));
    } else {
      out.write(reinterpret_cast<const char*>(v.bytes().data()), static_cast<std::streamsize>(v.bytes().size()));
    }
  }
}

std::vector<Batch> read_batch_dump(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<Batch> out;
  char magic[4];
  while (in.read(magic, 4)) {
    if (std::memcmp(magic, "VFDB", 4) != 0) fail(ErrorCode::FormatError, "bad batch dump record");
    Batch b;
    b.epoch = get<std::uint64_t>(in);
    b.batch_index = get<std::uint64_t>(in);
    const auto rows = get<std::uint32_t>(in);
    const auto views = get<std::uint32_t>(in);
    for (std::uint32_t r = 0; r < rows; ++r) b.labels.push_back(get<std::uint32_t>(in));
    for (std::uint32_t r = 0; r < rows; ++r) b.sample_indices.push_back(get<std::uint64_t>(in));
    for (std::uint32_t v = 0; v < views; ++v) {
      ViewTensor t;
      t.count = static_cast<int>(rows);
      t.height = static_cast<int>(get<std::uint32_t>(in));
      t.width = static_cast<int>(get<std::uint32_t>(in));
      t.channels = static_cast<int>(get<std::uint32_t>(in));
      const auto dtype = get<std::uint8_t>(in);
      const std::size_t n = t.row_size() * rows;
      if (dtype == 1) {
        std::vector<float> data(n);
        in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n * sizeof(float)));
        t.data = std::move(data);
      } else {
        std::vector<std::uint8_t> data(n);
        in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n));
        t.data = std::move(data);
      }
      if (!in) fail(ErrorCode::FormatError, "truncated batch dump");
      b.views.push_back(std::move(t));
    }
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace viewforge::harness
