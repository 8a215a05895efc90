#include "viewforge/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "viewforge/error.hpp"

namespace viewforge {

namespace {

void check_labels(std::span<const std::uint32_t> labels, Eigen::Index rows, int num_classes) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    fail(ErrorCode::ShapeMismatch, std::to_string(labels.size()) + " labels for " + std::to_string(rows) + " rows");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= static_cast<std::uint32_t>(num_classes)) {
      fail(ErrorCode::InvalidLabel, "label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                                        " is outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

std::vector<std::uint32_t> argmax_rows(const Matrix& logits) {
  std::vector<std::uint32_t> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(best);
  }
  return out;
}

void shuffle(std::vector<std::size_t>& v, RngStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

Matrix gather(const Matrix& m, const std::vector<std::size_t>& rows, std::size_t begin, std::size_t end) {
  Matrix out(static_cast<Eigen::Index>(end - begin), m.cols());
  for (std::size_t i = begin; i < end; ++i) out.row(static_cast<Eigen::Index>(i - begin)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<std::uint32_t> gather(std::span<const std::uint32_t> v, const std::vector<std::size_t>& rows,
                                  std::size_t begin, std::size_t end) {
  std::vector<std::uint32_t> out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) out.push_back(v[rows[i]]);
  return out;
}

}  // namespace

void validate(const ProbeSpec& spec) {
  if (spec.num_classes < 2) fail(ErrorCode::InvalidParam, "probe needs at least 2 classes");
  if (spec.kind == ProbeKind::Mlp && spec.hidden.empty()) {
    fail(ErrorCode::InvalidParam, "MLP probe needs at least one hidden width");
  }
  for (int w : spec.hidden) {
    if (w < 1) fail(ErrorCode::InvalidParam, "probe hidden widths must be >= 1");
  }
}

Probe::Probe(const ProbeSpec& spec, int rep_dim, SgdConfig optimizer, std::uint64_t seed)
    : spec_(spec), optimizer_(optimizer) {
  validate(spec_);
  std::vector<LayerSpec> layers;
  if (spec_.kind == ProbeKind::Mlp) {
    for (int w : spec_.hidden) layers.push_back({w, true});
  }
  layers.push_back({spec_.num_classes, false});
  RngStream rng(RngKey{seed, 0, 0, 0x9E0BE});
  net_ = make_mlp(rep_dim, layers, rng);
}

std::vector<std::uint32_t> Probe::predict(const Matrix& h) const { return argmax_rows(logits(h)); }

double softmax_cross_entropy(const Matrix& logits, std::span<const std::uint32_t> labels, Matrix* grad) {
  const Eigen::Index n = logits.rows();
  if (n == 0) fail(ErrorCode::EmptyInput, "cross-entropy over zero rows");
  check_labels(labels, n, static_cast<int>(logits.cols()));
  double total = 0.0;
  if (grad) grad->resize(n, logits.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mx = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp();
    const double sum = e.sum();
    const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]);
    total += std::log(sum) - (logits(i, y) - mx);
    if (grad) {
      grad->row(i) = e / sum;
      (*grad)(i, y) -= 1.0;
    }
  }
  if (grad) *grad /= static_cast<double>(n);
  return total / static_cast<double>(n);
}

ProbeStepResult online_probe_step(const Matrix& h, std::span<const std::uint32_t> labels, Probe& probe) {
  if (h.rows() == 0) fail(ErrorCode::EmptyInput, "probe step on zero rows");
  check_labels(labels, h.rows(), probe.spec().num_classes);
  MlpCache cache;
  const Matrix logits = probe.net().forward(h, &cache);
  Matrix dlogits;
  ProbeStepResult r;
  r.ce_loss = softmax_cross_entropy(logits, labels, &dlogits);
  const auto pred = argmax_rows(logits);
  std::uint64_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
  r.accuracy = static_cast<double>(correct) / static_cast<double>(pred.size());
  probe.record(correct, pred.size());
  r.running_accuracy = probe.running_accuracy();

  std::vector<Matrix> grads;
  probe.net().backward(cache, dlogits, grads);
  const auto params = parameters(probe.net());
  probe.optimizer().step(params, grads);
  return r;
}

double accuracy(const std::vector<std::uint32_t>& predicted, std::span<const std::uint32_t> labels) {
  if (predicted.size() != labels.size()) fail(ErrorCode::ShapeMismatch, "prediction and label counts differ");
  if (predicted.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

OfflineProbeResult offline_probe(const Matrix& reps, std::span<const std::uint32_t> labels, const ProbeSpec& spec,
                                 const OfflineProbeOptions& options) {
  if (reps.rows() == 0 || reps.cols() == 0) fail(ErrorCode::EmptyInput, "offline probe on an empty table");
  validate(spec);
  check_labels(labels, reps.rows(), spec.num_classes);
  if (options.epochs < 1 || options.batch_size < 1) fail(ErrorCode::InvalidParam, "epochs and batch_size must be >= 1");
  if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0)) {
    fail(ErrorCode::InvalidParam, "train_fraction must be in (0, 1)");
  }

  const auto n = static_cast<std::size_t>(reps.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  RngStream split_rng(RngKey{options.split_seed, 0, 0, 0x5B117});
  shuffle(order, split_rng);
  const std::size_t n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(options.train_fraction * static_cast<double>(n))), 1, n > 1 ? n - 1 : 1);

  Matrix x_train = gather(reps, order, 0, n_train);
  Matrix x_val = gather(reps, order, n_train, n);
  const auto y_train = gather(labels, order, 0, n_train);
  const auto y_val = gather(labels, order, n_train, n);
  if (options.standardize) {
    const Eigen::RowVectorXd mean = x_train.colwise().mean();
    Eigen::RowVectorXd sd = ((x_train.rowwise() - mean).array().square().colwise().sum() /
                             static_cast<double>(n_train)).sqrt();
    sd = sd.unaryExpr([](double v) { return v > 1e-12 ? v : 1.0; });
    x_train = (x_train.rowwise() - mean).array().rowwise() / sd.array();
    x_val = (x_val.rowwise() - mean).array().rowwise() / sd.array();
  }

  ProbeSpec offline = spec;
  offline.mode = ProbeMode::Offline;
  Probe probe(offline, static_cast<int>(reps.cols()), options.optimizer, options.seed);
  RngStream order_rng(RngKey{options.seed, 0, 0, 0x0FF1E});

  OfflineProbeResult result;
  result.train_size = n_train;
  result.val_size = n - n_train;
  std::vector<std::size_t> batch_order(n_train);
  std::iota(batch_order.begin(), batch_order.end(), 0);
  const auto bs = static_cast<std::size_t>(options.batch_size);
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    shuffle(batch_order, order_rng);
    for (std::size_t start = 0; start < n_train; start += bs) {
      const std::size_t end = std::min(start + bs, n_train);
      const Matrix xb = gather(x_train, batch_order, start, end);
      const auto yb = gather(std::span<const std::uint32_t>(y_train), batch_order, start, end);
      online_probe_step(xb, yb, probe);
    }
    result.train_curve.push_back(accuracy(probe.predict(x_train), y_train));
    const double val = result.val_size ? accuracy(probe.predict(x_val), y_val) : 0.0;
    result.val_curve.push_back(val);
    if (val > result.best_val_accuracy || epoch == 1) {
      result.best_val_accuracy = val;
      result.best_epoch = epoch;
    }
  }
  return result;
}

}  // namespace viewforge
