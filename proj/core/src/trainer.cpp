#include "viewforge/trainer.hpp"

#include <cmath>

#include "viewforge/error.hpp"

namespace viewforge {

namespace {

void check_views(Method method, std::span<const Matrix> z) {
  if (z.size() != required_views(method)) {
    fail(ErrorCode::ViewCountMismatch, std::string(to_string(method)) + " needs " +
                                           std::to_string(required_views(method)) + " views, got " +
                                           std::to_string(z.size()));
  }
  for (std::size_t v = 1; v < z.size(); ++v) {
    if (z[v].rows() != z[0].rows() || z[v].cols() != z[0].cols()) {
      fail(ErrorCode::ShapeMismatch, "views carry different numbers of rows or dimensions");
    }
  }
}

Matrix interleave(std::span<const Matrix> z) {
  const Eigen::Index b = z[0].rows();
  const auto v = static_cast<Eigen::Index>(z.size());
  Matrix out(b * v, z[0].cols());
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index k = 0; k < v; ++k) out.row(i * v + k) = z[static_cast<std::size_t>(k)].row(i);
  }
  return out;
}

std::vector<Matrix> deinterleave(const Matrix& g, std::size_t views) {
  const auto v = static_cast<Eigen::Index>(views);
  const Eigen::Index b = g.rows() / v;
  std::vector<Matrix> out(views, Matrix(b, g.cols()));
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index k = 0; k < v; ++k) out[static_cast<std::size_t>(k)].row(i) = g.row(i * v + k);
  }
  return out;
}

}  // namespace

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::SimClr: return "simclr";
    case Method::VicReg: return "vicreg";
    case Method::Barlow: return "barlow";
    case Method::InstanceSimClr: return "instance_simclr";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::SimClr, Method::VicReg, Method::Barlow, Method::InstanceSimClr}) {
    if (name == to_string(m)) return m;
  }
  fail(ErrorCode::ConfigError, "unknown method '" + std::string(name) + "'");
}

std::size_t required_views(Method m) noexcept { return m == Method::InstanceSimClr ? 3 : 2; }

LossEval evaluate_loss(Method method, std::span<const Matrix> z, const LossConfig& config) {
  check_views(method, z);
  const Eigen::Index b = z[0].rows();
  LossEval out;
  switch (method) {
    case Method::SimClr:
    case Method::VicReg: {
      const Matrix stacked = interleave(z);
      const RelationMatrix g = build_pair_relation(static_cast<std::size_t>(b));
      LossOutput l = method == Method::SimClr ? simclr_loss(stacked, g, config.simclr)
                                              : vicreg_loss(stacked, g, config.vicreg);
      out.value = l.value;
      out.terms = std::move(l.terms);
      out.grad_z = deinterleave(l.grad, 2);
      break;
    }
    case Method::Barlow: {
      LossOutput l = barlow_loss(z[0], z[1], config.barlow);
      out.value = l.value;
      out.terms = std::move(l.terms);
      out.grad_z = {std::move(l.grad), std::move(l.grad_right)};
      break;
    }
    case Method::InstanceSimClr: {
      if (b < 1) fail(ErrorCode::InsufficientBatch, "instance batch with no sources");
      RelationMatrix g(3);
      g.set_pair(0, 1);
      out.grad_z.assign(3, Matrix::Zero(b, z[0].cols()));
      Matrix block(3, z[0].cols());
      for (Eigen::Index i = 0; i < b; ++i) {
        for (int v = 0; v < 3; ++v) block.row(v) = z[static_cast<std::size_t>(v)].row(i);
        const LossOutput l = simclr_loss(block, g, config.simclr);
        out.value += l.value / static_cast<double>(b);
        for (int v = 0; v < 3; ++v) out.grad_z[static_cast<std::size_t>(v)].row(i) = l.grad.row(v) / static_cast<double>(b);
      }
      out.terms = {{"L_instance", out.value}};
      break;
    }
  }
  return out;
}

std::vector<double> embedding_std(const Matrix& z) {
  std::vector<double> out(static_cast<std::size_t>(z.cols()), 0.0);
  if (z.rows() < 2) return out;
  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Eigen::RowVectorXd var =
      (z.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(z.rows() - 1);
  for (Eigen::Index d = 0; d < z.cols(); ++d) out[static_cast<std::size_t>(d)] = std::sqrt(var(d));
  return out;
}

Matrix view_matrix(const ViewTensor& view) {
  const auto cols = static_cast<Eigen::Index>(view.row_size());
  Matrix out(view.count, cols);
  if (view.is_float()) {
    const auto& src = view.floats();
    for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = src[static_cast<std::size_t>(i)];
  } else {
    const auto& src = view.bytes();
    for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = src[static_cast<std::size_t>(i)] / 255.0;
  }
  return out;
}

std::vector<Matrix> view_matrices(const Batch& batch) {
  std::vector<Matrix> out;
  out.reserve(batch.views.size());
  for (const auto& v : batch.views) out.push_back(view_matrix(v));
  return out;
}

StepMetrics train_step(Method method, std::span<const Matrix> views, TrainState& state, const LossConfig& config,
                       std::vector<Matrix>* representations) {
  if (views.size() != required_views(method)) {
    fail(ErrorCode::ViewCountMismatch, std::string(to_string(method)) + " needs " +
                                           std::to_string(required_views(method)) + " views, got " +
                                           std::to_string(views.size()));
  }
  ForwardResult fw = forward(state.net, views);
  for (const auto& z : fw.z) {
    if (!z.allFinite()) {
      fail(ErrorCode::NanLoss, "non-finite embeddings at step " + std::to_string(state.step + 1));
    }
  }
  const LossEval loss = evaluate_loss(method, fw.z, config);

  StepMetrics m;
  m.loss = loss.value;
  m.terms = loss.terms;
  Matrix all(fw.z[0].rows() * static_cast<Eigen::Index>(fw.z.size()), fw.z[0].cols());
  for (std::size_t v = 0; v < fw.z.size(); ++v) all.middleRows(static_cast<Eigen::Index>(v) * fw.z[0].rows(), fw.z[0].rows()) = fw.z[v];
  m.embedding_std = embedding_std(all);
  double sum = 0.0;
  for (double s : m.embedding_std) sum += s;
  m.mean_std = m.embedding_std.empty() ? 0.0 : sum / static_cast<double>(m.embedding_std.size());
  m.collapsed = m.mean_std < kCollapseThreshold;

  const std::string at = " at step " + std::to_string(state.step + 1);
  if (!std::isfinite(loss.value)) fail(ErrorCode::NanLoss, "loss is " + std::to_string(loss.value) + at);
  // Cosine-based losses stay finite while the raw embeddings overflow.
  if (!std::isfinite(m.mean_std)) fail(ErrorCode::NanLoss, "embedding statistics overflow" + at);
  const auto grads = backward(state.net, fw.tape, loss.grad_z);
  for (const auto& g : grads) {
    if (!g.allFinite()) fail(ErrorCode::NanLoss, "non-finite gradient" + at);
  }
  state.optimizer.step(state.net.parameters(), grads);
  fw.tape.version = 0;
  state.net.touch();
  if (representations) *representations = std::move(fw.h);
  m.step = ++state.step;
  return m;
}

StepMetrics train_step(Method method, const Batch& batch, TrainState& state, const LossConfig& config,
                       std::vector<Matrix>* representations) {
  const auto views = view_matrices(batch);
  return train_step(method, views, state, config, representations);
}

}  // namespace viewforge
