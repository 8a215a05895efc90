#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace viewforge {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Symmetric, nonnegative positive-pair structure over N rows with zero
// diagonal. Stored sparsely; both orientations of every pair are kept.
class RelationMatrix {
 public:
  struct Entry {
    std::size_t row;
    std::size_t col;
    double weight;
  };

  explicit RelationMatrix(std::size_t size = 0) : size_(size) {}

  // Sets weight on (i, j) and (j, i). Throws InvalidParam on i == j, an
  // index out of range or a negative weight. A zero weight removes the pair.
  void set_pair(std::size_t i, std::size_t j, double weight = 1.0);
  double at(std::size_t i, std::size_t j) const;

  std::size_t size() const noexcept { return size_; }
  // Nonzero entries sorted by (row, col).
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t nonzeros() const noexcept { return entries_.size(); }
  double total_weight() const noexcept;

  Matrix dense() const;
  // Throws InvalidParam unless `g` is square, symmetric, nonnegative with zero diagonal.
  static RelationMatrix from_dense(const Matrix& g);

 private:
  std::size_t size_;
  std::vector<Entry> entries_;
};

// Rows k*V .. k*V+V-1 are the V views of source k and are mutually related.
// With V = 2 this is the block-pair matrix: ones at (2k, 2k+1) and (2k+1, 2k).
RelationMatrix build_pair_relation(std::size_t n_sources, std::size_t views_per_source = 2);

// Every ordered related pair (i, j), i ascending then j ascending.
std::vector<std::pair<std::size_t, std::size_t>> related_pairs(const RelationMatrix& g);

// X_left / X_right: for each related ordered pair (i, j), samples[i] goes
// left and samples[j] goes right. Throws EmptyRelation when g has no pairs.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_left_right(std::span<const T> samples, const RelationMatrix& g);

// u.v / (|u| |v|). Throws DegenerateEmbedding on a zero vector.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct VicRegCoeffs {
  double alpha = 25.0;  // variance
  double beta = 1.0;    // covariance
  double gamma = 25.0;  // invariance
  double epsilon = 1e-4;
};

enum class SimClrReduction { Sum, MeanOverPositives };

struct SimClrParams {
  double tau = 0.15;
  SimClrReduction reduction = SimClrReduction::Sum;
};

struct BarlowParams {
  double alpha = 0.0025;  // off-diagonal weight ("lambd")
};

struct LossOutput {
  double value = 0.0;
  Matrix grad;        // dL/dZ, or dL/dZ_left for Barlow Twins
  Matrix grad_right;  // Barlow Twins only: dL/dZ_right
  std::map<std::string, double> terms;
  Matrix estimated_relation;  // SimCLR only: G-hat
};

// alpha * sum_k relu(1 - sqrt(Cov_kk + eps)) + beta * sum_{j != k} Cov_jk^2
//   + (gamma / N) * sum_ij G_ij |Z_i - Z_j|^2, Cov with 1/(N-1).
// Terms: L_var, L_cov, L_inv. Throws InsufficientBatch for N < 2.
LossOutput vicreg_loss(const Matrix& z, const RelationMatrix& g, const VicRegCoeffs& coeffs);

// G-hat_ij = softmax_{j != i}(cos(z_i, z_j) / tau), L = -sum_ij G_ij log G-hat_ij.
// Terms: L_sum (un-reduced value), positives (sum of G).
LossOutput simclr_loss(const Matrix& z, const RelationMatrix& g, const SimClrParams& params);

// Columns are mean-centered, C_kk' = cos(left[:, k], right[:, k']);
// L = sum_k (C_kk - 1)^2 + alpha * sum_{k != k'} C_kk'^2. Terms: L_diag, L_offdiag.
LossOutput barlow_loss(const Matrix& z_left, const Matrix& z_right, const BarlowParams& params);

// --- template definition -----------------------------------------------------

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_left_right(std::span<const T> samples, const RelationMatrix& g) {
  const auto pairs = related_pairs(g);
  std::pair<std::vector<T>, std::vector<T>> out;
  out.first.reserve(pairs.size());
  out.second.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    out.first.push_back(samples[i]);
    out.second.push_back(samples[j]);
  }
  return out;
}

}  // namespace viewforge
