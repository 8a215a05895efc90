#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "viewforge/model.hpp"

namespace viewforge {

enum class ProbeKind { Linear, Mlp };
enum class ProbeMode { Online, Offline };

struct ProbeSpec {
  ProbeKind kind = ProbeKind::Linear;
  std::vector<int> hidden;  // MLP only, must be non-empty
  ProbeMode mode = ProbeMode::Online;
  int num_classes = 0;
};

void validate(const ProbeSpec& spec);

// Classifier over representations H plus its optimizer state. Never sees Z.
class Probe {
 public:
  Probe(const ProbeSpec& spec, int rep_dim, SgdConfig optimizer, std::uint64_t seed);

  const ProbeSpec& spec() const noexcept { return spec_; }
  Mlp& net() noexcept { return net_; }
  const Mlp& net() const noexcept { return net_; }
  SgdOptimizer& optimizer() noexcept { return optimizer_; }

  Matrix logits(const Matrix& h) const { return net_.forward(h); }
  std::vector<std::uint32_t> predict(const Matrix& h) const;

  // Accuracy accumulated over every online step so far.
  double running_accuracy() const noexcept { return seen_ ? static_cast<double>(correct_) / seen_ : 0.0; }
  void reset_running() noexcept { seen_ = correct_ = 0; }
  void record(std::uint64_t correct, std::uint64_t seen) noexcept {
    correct_ += correct;
    seen_ += seen;
  }

 private:
  ProbeSpec spec_;
  Mlp net_;
  SgdOptimizer optimizer_;
  std::uint64_t seen_ = 0;
  std::uint64_t correct_ = 0;
};

struct ProbeStepResult {
  double ce_loss = 0.0;   // mean softmax cross-entropy before the step
  double accuracy = 0.0;  // on this batch, before the step
  double running_accuracy = 0.0;
};

// Mean softmax cross-entropy and its gradient w.r.t. the logits.
double softmax_cross_entropy(const Matrix& logits, std::span<const std::uint32_t> labels, Matrix* grad);

// One SGD step on the probe only. `h` is a detached copy of the backbone
// output; nothing flows back to the encoder. Throws InvalidLabel.
ProbeStepResult online_probe_step(const Matrix& h, std::span<const std::uint32_t> labels, Probe& probe);

struct OfflineProbeOptions {
  int epochs = 100;
  int batch_size = 64;
  SgdConfig optimizer{0.1, 0.9, 0.0};
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;  // fixed train/validation split
  std::uint64_t seed = 0;        // probe init and minibatch order
  bool standardize = true;       // z-score features with train-split statistics
};

struct OfflineProbeResult {
  double best_val_accuracy = 0.0;
  int best_epoch = 0;  // 1-based; earliest epoch attaining the best
  std::vector<double> val_curve;
  std::vector<double> train_curve;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
};

// Trains a fresh probe on frozen representations and records validation
// accuracy after every epoch. Throws EmptyInput on an empty table.
OfflineProbeResult offline_probe(const Matrix& reps, std::span<const std::uint32_t> labels, const ProbeSpec& spec,
                                 const OfflineProbeOptions& options = {});

double accuracy(const std::vector<std::uint32_t>& predicted, std::span<const std::uint32_t> labels);

}  // namespace viewforge
