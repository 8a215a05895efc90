#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "viewforge/losses.hpp"
#include "viewforge/rng.hpp"

namespace viewforge {

// Row-major activations: y = x * weight + bias, weight is in x out.
struct AffineLayer {
  Matrix weight;
  Matrix bias;  // 1 x out
  bool relu = false;
};

struct LayerSpec {
  int out_dim = 0;
  bool relu = true;
};

struct EncoderSpec {
  int input_dim = 0;  // flattened image size
  std::vector<LayerSpec> layers;
};

// depth 0 is the identity. Otherwise depth affine layers
// rep -> hidden -> ... -> hidden -> output_width with ReLU between them.
struct ProjectorSpec {
  int depth = 0;
  int hidden_width = 0;
  int output_width = 0;
};

struct MlpCache {
  std::vector<Matrix> inputs;   // input of each layer
  std::vector<Matrix> outputs;  // post-activation output of each layer
};

class Mlp {
 public:
  Mlp() = default;
  Mlp(int input_dim, std::vector<AffineLayer> layers);

  int input_dim() const noexcept { return input_dim_; }
  int output_dim() const noexcept;
  std::vector<AffineLayer>& layers() noexcept { return layers_; }
  const std::vector<AffineLayer>& layers() const noexcept { return layers_; }

  // Throws ShapeMismatch when x.cols() != input_dim().
  Matrix forward(const Matrix& x, MlpCache* cache = nullptr) const;
  // Appends (dW, db) per layer, first layer first, to `grads`; returns dL/dx.
  Matrix backward(const MlpCache& cache, const Matrix& grad_out, std::vector<Matrix>& grads) const;

 private:
  int input_dim_ = 0;
  std::vector<AffineLayer> layers_;
};

// He-normal weights, zero biases.
Mlp make_mlp(int input_dim, const std::vector<LayerSpec>& layers, RngStream& rng);
Mlp make_encoder(const EncoderSpec& spec, RngStream& rng);
Mlp make_projector(const ProjectorSpec& spec, int rep_dim, RngStream& rng);

struct ParamRef {
  Matrix* value;
  bool decay;  // weight decay applies to weights only, never to biases
};

std::vector<ParamRef> parameters(Mlp& mlp);

class Network {
 public:
  Network() = default;
  Network(Mlp encoder, Mlp projector) : encoder_(std::move(encoder)), projector_(std::move(projector)) {}

  Mlp& encoder() noexcept { return encoder_; }
  const Mlp& encoder() const noexcept { return encoder_; }
  Mlp& projector() noexcept { return projector_; }
  const Mlp& projector() const noexcept { return projector_; }

  int input_dim() const noexcept { return encoder_.input_dim(); }
  int rep_dim() const noexcept { return encoder_.output_dim(); }
  int embed_dim() const noexcept { return projector_.layers().empty() ? rep_dim() : projector_.output_dim(); }

  // Encoder parameters first, then projector.
  std::vector<ParamRef> parameters();
  // Bumped whenever parameters change through the library; tapes recorded
  // under an older version are stale.
  std::uint64_t version() const noexcept { return version_; }
  void touch() noexcept { ++version_; }

 private:
  Mlp encoder_;
  Mlp projector_;
  std::uint64_t version_ = 1;
};

Network make_network(const EncoderSpec& encoder, const ProjectorSpec& projector, std::uint64_t seed);

struct Tape {
  std::uint64_t version = 0;  // 0: nothing recorded
  std::vector<Eigen::Index> view_rows;
  MlpCache encoder;
  MlpCache projector;
};

struct ForwardResult {
  std::vector<Matrix> h;  // backbone representation per view
  std::vector<Matrix> z;  // projector output per view
  Tape tape;
};

// Runs every view through the same encoder and projector.
ForwardResult forward(const Network& net, std::span<const Matrix> views);

// Parameter gradients in Network::parameters() order. Throws StaleTape when
// the tape is empty, already consumed, or recorded before the last update,
// and ShapeMismatch when grad_z does not match the recorded views.
std::vector<Matrix> backward(const Network& net, const Tape& tape, std::span<const Matrix> grad_z);

struct SgdConfig {
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double clip_norm = 0.0;  // > 0: rescale g so its global L2 norm is at most clip_norm
};

// v <- momentum * v + g;  p <- p - lr * (v + weight_decay * p)  (decay on weights only).
class SgdOptimizer {
 public:
  SgdOptimizer() = default;
  explicit SgdOptimizer(SgdConfig config) : config_(config) {}

  void step(std::span<const ParamRef> params, std::span<const Matrix> grads);
  SgdConfig& config() noexcept { return config_; }
  const SgdConfig& config() const noexcept { return config_; }
  const std::vector<Matrix>& buffers() const noexcept { return buffers_; }

 private:
  SgdConfig config_;
  std::vector<Matrix> buffers_;
};

// Gradients from `tape`, then one optimizer step. The tape is consumed.
void backward_and_step(Network& net, Tape& tape, std::span<const Matrix> grad_z, SgdOptimizer& optimizer);

// target <- m * target + (1 - m) * online, elementwise over every parameter.
void ema_update(Network& target, const Network& online, double m);

}  // namespace viewforge
