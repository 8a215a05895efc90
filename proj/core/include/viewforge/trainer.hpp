#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "viewforge/loader.hpp"
#include "viewforge/losses.hpp"
#include "viewforge/model.hpp"

namespace viewforge {

enum class Method { SimClr, VicReg, Barlow, InstanceSimClr };

std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view name);
// 2 for the pair methods, 3 (pos_a, pos_b, patch_neg) for InstanceSimClr.
std::size_t required_views(Method m) noexcept;

struct LossConfig {
  SimClrParams simclr{0.15, SimClrReduction::MeanOverPositives};
  VicRegCoeffs vicreg;
  BarlowParams barlow;
};

struct TrainState {
  Network net;
  SgdOptimizer optimizer;
  std::uint64_t step = 0;
};

// Mean per-dimension std below which a run is flagged collapsed.
inline constexpr double kCollapseThreshold = 1e-3;

struct StepMetrics {
  std::uint64_t step = 0;  // steps completed, including this one
  double loss = 0.0;
  std::map<std::string, double> terms;
  std::vector<double> embedding_std;  // per dimension over all views' rows
  double mean_std = 0.0;
  bool collapsed = false;
};

struct LossEval {
  double value = 0.0;
  std::map<std::string, double> terms;
  std::vector<Matrix> grad_z;  // one per view
};

// Evaluates the method's loss on per-view embeddings. SimClr/VicReg stack the
// views interleaved (row 2b is view 0 of source b, row 2b+1 view 1) against
// build_pair_relation(B); Barlow uses left = view 0, right = view 1;
// InstanceSimClr averages simclr_loss over the per-source 3x3 blocks.
// Throws ViewCountMismatch.
LossEval evaluate_loss(Method method, std::span<const Matrix> z, const LossConfig& config);

// Per-dimension std of the embedding rows, N-1 normalization.
std::vector<double> embedding_std(const Matrix& z);

// N x (H*W*C) doubles; uint8 views are scaled to [0, 1].
Matrix view_matrix(const ViewTensor& view);
std::vector<Matrix> view_matrices(const Batch& batch);

// Forward, loss, backward and one optimizer step. Collapse is reported, not
// raised; non-finite embeddings, embedding statistics, loss or gradients
// throw NanLoss before any update.
// `representations`, when given, receives H per view from before the update.
StepMetrics train_step(Method method, std::span<const Matrix> views, TrainState& state, const LossConfig& config,
                       std::vector<Matrix>* representations = nullptr);
StepMetrics train_step(Method method, const Batch& batch, TrainState& state, const LossConfig& config,
                       std::vector<Matrix>* representations = nullptr);

}  // namespace viewforge
