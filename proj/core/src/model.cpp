#include "viewforge/model.hpp"

#include <cmath>
#include <iterator>
#include <string>

#include "viewforge/error.hpp"

namespace viewforge {

namespace {

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

Matrix stack_rows(std::span<const Matrix> parts, Eigen::Index cols) {
  Eigen::Index rows = 0;
  for (const auto& p : parts) rows += p.rows();
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p;
    at += p.rows();
  }
  return out;
}

}  // namespace

Mlp::Mlp(int input_dim, std::vector<AffineLayer> layers) : input_dim_(input_dim), layers_(std::move(layers)) {
  Eigen::Index dim = input_dim_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weight.rows() != dim || l.bias.rows() != 1 || l.bias.cols() != l.weight.cols()) {
      fail(ErrorCode::ShapeMismatch, "layer " + std::to_string(i) + " has weight " + shape(l.weight) + " and bias " +
                                         shape(l.bias) + " after a " + std::to_string(dim) + "-wide input");
    }
    dim = l.weight.cols();
  }
}

int Mlp::output_dim() const noexcept {
  return layers_.empty() ? input_dim_ : static_cast<int>(layers_.back().weight.cols());
}

Matrix Mlp::forward(const Matrix& x, MlpCache* cache) const {
  if (x.cols() != input_dim_) {
    fail(ErrorCode::ShapeMismatch, "input has " + std::to_string(x.cols()) + " columns, expected " +
                                       std::to_string(input_dim_));
  }
  if (cache) {
    cache->inputs.clear();
    cache->outputs.clear();
  }
  Matrix a = x;
  for (const auto& l : layers_) {
    Matrix y = a * l.weight;
    y.rowwise() += l.bias.row(0);
    if (l.relu) y = y.cwiseMax(0.0);
    if (cache) cache->inputs.push_back(std::move(a));
    a = std::move(y);
    if (cache) cache->outputs.push_back(a);
  }
  return a;
}

Matrix Mlp::backward(const MlpCache& cache, const Matrix& grad_out, std::vector<Matrix>& grads) const {
  const std::size_t first = grads.size();
  grads.resize(first + 2 * layers_.size());
  Matrix g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const auto& l = layers_[i];
    if (l.relu) g = (cache.outputs[i].array() > 0.0).select(g, 0.0);
    grads[first + 2 * i] = cache.inputs[i].transpose() * g;
    grads[first + 2 * i + 1] = g.colwise().sum();
    g = g * l.weight.transpose();
  }
  return g;
}

Mlp make_mlp(int input_dim, const std::vector<LayerSpec>& specs, RngStream& rng) {
  if (input_dim < 1) fail(ErrorCode::InvalidParam, "input_dim must be >= 1");
  std::vector<AffineLayer> layers;
  int dim = input_dim;
  for (const auto& s : specs) {
    if (s.out_dim < 1) fail(ErrorCode::InvalidParam, "layer out_dim must be >= 1");
    AffineLayer l;
    const double sd = std::sqrt(2.0 / dim);
    l.weight.resize(dim, s.out_dim);
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = sd * rng.normal();
    }
    l.bias = Matrix::Zero(1, s.out_dim);
    l.relu = s.relu;
    layers.push_back(std::move(l));
    dim = s.out_dim;
  }
  return Mlp(input_dim, std::move(layers));
}

Mlp make_encoder(const EncoderSpec& spec, RngStream& rng) {
  if (spec.layers.empty()) fail(ErrorCode::InvalidParam, "encoder needs at least one layer");
  return make_mlp(spec.input_dim, spec.layers, rng);
}

Mlp make_projector(const ProjectorSpec& spec, int rep_dim, RngStream& rng) {
  if (spec.depth < 0) fail(ErrorCode::InvalidParam, "projector depth must be >= 0");
  if (spec.depth == 0) return Mlp(rep_dim, {});
  if (spec.output_width < 1) fail(ErrorCode::InvalidParam, "projector output_width must be >= 1");
  if (spec.depth > 1 && spec.hidden_width < 1) fail(ErrorCode::InvalidParam, "projector hidden_width must be >= 1");
  std::vector<LayerSpec> layers;
  for (int i = 0; i + 1 < spec.depth; ++i) layers.push_back({spec.hidden_width, true});
  layers.push_back({spec.output_width, false});
  return make_mlp(rep_dim, layers, rng);
}

std::vector<ParamRef> parameters(Mlp& mlp) {
  std::vector<ParamRef> out;
  for (auto& l : mlp.layers()) {
    out.push_back({&l.weight, true});
    out.push_back({&l.bias, false});
  }
  return out;
}

std::vector<ParamRef> Network::parameters() {
  auto out = viewforge::parameters(encoder_);
  auto proj = viewforge::parameters(projector_);
  out.insert(out.end(), proj.begin(), proj.end());
  return out;
}

Network make_network(const EncoderSpec& encoder, const ProjectorSpec& projector, std::uint64_t seed) {
  RngStream rng(RngKey{seed, 0, 0, 0});
  RngStream enc_rng = rng.substream(0);
  RngStream proj_rng = rng.substream(1);
  Mlp enc = make_encoder(encoder, enc_rng);
  Mlp proj = make_projector(projector, enc.output_dim(), proj_rng);
  return Network(std::move(enc), std::move(proj));
}

ForwardResult forward(const Network& net, std::span<const Matrix> views) {
  if (views.empty()) fail(ErrorCode::ShapeMismatch, "forward needs at least one view");
  for (std::size_t v = 0; v < views.size(); ++v) {
    if (views[v].cols() != net.input_dim()) {
      fail(ErrorCode::ShapeMismatch, "view " + std::to_string(v) + " is " + shape(views[v]) + ", encoder expects " +
                                         std::to_string(net.input_dim()) + " columns");
    }
  }
  ForwardResult out;
  out.tape.version = net.version();
  const Matrix x = stack_rows(views, net.input_dim());
  const Matrix h = net.encoder().forward(x, &out.tape.encoder);
  const Matrix z = net.projector().forward(h, &out.tape.projector);
  Eigen::Index at = 0;
  for (const auto& v : views) {
    out.tape.view_rows.push_back(v.rows());
    out.h.push_back(h.middleRows(at, v.rows()));
    out.z.push_back(z.middleRows(at, v.rows()));
    at += v.rows();
  }
  return out;
}

std::vector<Matrix> backward(const Network& net, const Tape& tape, std::span<const Matrix> grad_z) {
  if (tape.version == 0) fail(ErrorCode::StaleTape, "no forward pass recorded on this tape");
  if (tape.version != net.version()) fail(ErrorCode::StaleTape, "tape was recorded before the last parameter update");
  if (grad_z.size() != tape.view_rows.size()) {
    fail(ErrorCode::ShapeMismatch, "got " + std::to_string(grad_z.size()) + " view gradients for " +
                                       std::to_string(tape.view_rows.size()) + " recorded views");
  }
  for (std::size_t v = 0; v < grad_z.size(); ++v) {
    if (grad_z[v].rows() != tape.view_rows[v] || grad_z[v].cols() != net.embed_dim()) {
      fail(ErrorCode::ShapeMismatch, "gradient for view " + std::to_string(v) + " is " + shape(grad_z[v]));
    }
  }
  const Matrix gz = stack_rows(grad_z, net.embed_dim());
  std::vector<Matrix> enc_grads, proj_grads;
  const Matrix gh = net.projector().backward(tape.projector, gz, proj_grads);
  net.encoder().backward(tape.encoder, gh, enc_grads);
  enc_grads.insert(enc_grads.end(), std::make_move_iterator(proj_grads.begin()),
                   std::make_move_iterator(proj_grads.end()));
  return enc_grads;
}

void SgdOptimizer::step(std::span<const ParamRef> params, std::span<const Matrix> grads) {
  if (params.size() != grads.size()) fail(ErrorCode::ShapeMismatch, "parameter and gradient counts differ");
  if (buffers_.empty()) {
    for (const auto& p : params) buffers_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
  }
  if (buffers_.size() != params.size()) fail(ErrorCode::ShapeMismatch, "optimizer state does not match parameters");
  double scale = 1.0;
  if (config_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& g : grads) sq += g.squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > config_.clip_norm) scale = config_.clip_norm / norm;
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i].value;
    if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols() || buffers_[i].rows() != p.rows() ||
        buffers_[i].cols() != p.cols()) {
      fail(ErrorCode::ShapeMismatch, "parameter " + std::to_string(i) + " is " + shape(p) + ", gradient " +
                                         shape(grads[i]));
    }
    buffers_[i] = config_.momentum * buffers_[i] + scale * grads[i];
    if (params[i].decay && config_.weight_decay != 0.0) {
      p -= config_.lr * (buffers_[i] + config_.weight_decay * p);
    } else {
      p -= config_.lr * buffers_[i];
    }
  }
}

void backward_and_step(Network& net, Tape& tape, std::span<const Matrix> grad_z, SgdOptimizer& optimizer) {
  const auto grads = backward(net, tape, grad_z);
  const auto params = net.parameters();
  optimizer.step(params, grads);
  tape.version = 0;
  net.touch();
}

void ema_update(Network& target, const Network& online, double m) {
  if (!(m >= 0.0 && m <= 1.0)) fail(ErrorCode::InvalidParam, "EMA momentum must be in [0, 1]");
  auto t = target.parameters();
  std::vector<const Matrix*> o;
  for (const Mlp* mlp : {&online.encoder(), &online.projector()}) {
    for (const auto& l : mlp->layers()) {
      o.push_back(&l.weight);
      o.push_back(&l.bias);
    }
  }
  if (t.size() != o.size()) fail(ErrorCode::ShapeMismatch, "EMA over networks with different layer counts");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i].value->rows() != o[i]->rows() || t[i].value->cols() != o[i]->cols()) {
      fail(ErrorCode::ShapeMismatch,
           "EMA parameter " + std::to_string(i) + ": " + shape(*t[i].value) + " vs " + shape(*o[i]));
    }
  }
  for (std::size_t i = 0; i < t.size(); ++i) *t[i].value = m * *t[i].value + (1.0 - m) * *o[i];
  target.touch();
}

}  // namespace viewforge
