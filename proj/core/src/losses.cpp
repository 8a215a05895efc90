#include "viewforge/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "viewforge/error.hpp"

namespace viewforge {

namespace {

void require_finite(const Matrix& z, const char* what) {
  if (!z.allFinite()) fail(ErrorCode::InvalidParam, std::string(what) + " contains non-finite entries");
}

void require_relation_size(const RelationMatrix& g, Eigen::Index n) {
  if (g.size() != static_cast<std::size_t>(n)) {
    fail(ErrorCode::ShapeMismatch, "relation matrix is " + std::to_string(g.size()) + "x" + std::to_string(g.size()) +
                                       " but the batch has " + std::to_string(n) + " rows");
  }
}

}  // namespace

void RelationMatrix::set_pair(std::size_t i, std::size_t j, double weight) {
  if (i >= size_ || j >= size_) fail(ErrorCode::InvalidParam, "relation index out of range");
  if (i == j) fail(ErrorCode::InvalidParam, "relation diagonal must be zero");
  if (!(weight >= 0.0) || !std::isfinite(weight)) fail(ErrorCode::InvalidParam, "relation weight must be finite and >= 0");
  for (auto [r, c] : {std::pair{i, j}, std::pair{j, i}}) {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), std::pair{r, c}, [](const Entry& e, const auto& key) {
      return std::pair{e.row, e.col} < key;
    });
    const bool present = it != entries_.end() && it->row == r && it->col == c;
    if (weight == 0.0) {
      if (present) entries_.erase(it);
    } else if (present) {
      it->weight = weight;
    } else {
      entries_.insert(it, Entry{r, c, weight});
    }
  }
}

double RelationMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= size_ || j >= size_) fail(ErrorCode::IndexError, "relation index out of range");
  auto it = std::lower_bound(entries_.begin(), entries_.end(), std::pair{i, j}, [](const Entry& e, const auto& key) {
    return std::pair{e.row, e.col} < key;
  });
  return it != entries_.end() && it->row == i && it->col == j ? it->weight : 0.0;
}

double RelationMatrix::total_weight() const noexcept {
  double total = 0.0;
  for (const auto& e : entries_) total += e.weight;
  return total;
}

Matrix RelationMatrix::dense() const {
  Matrix g = Matrix::Zero(static_cast<Eigen::Index>(size_), static_cast<Eigen::Index>(size_));
  for (const auto& e : entries_) g(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = e.weight;
  return g;
}

RelationMatrix RelationMatrix::from_dense(const Matrix& g) {
  if (g.rows() != g.cols()) fail(ErrorCode::InvalidParam, "relation matrix must be square");
  RelationMatrix out(static_cast<std::size_t>(g.rows()));
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    if (g(i, i) != 0.0) fail(ErrorCode::InvalidParam, "relation diagonal must be zero");
    for (Eigen::Index j = i + 1; j < g.cols(); ++j) {
      if (g(i, j) != g(j, i)) fail(ErrorCode::InvalidParam, "relation matrix must be symmetric");
      if (g(i, j) != 0.0) out.set_pair(static_cast<std::size_t>(i), static_cast<std::size_t>(j), g(i, j));
    }
  }
  return out;
}

RelationMatrix build_pair_relation(std::size_t n_sources, std::size_t views_per_source) {
  if (n_sources < 1) fail(ErrorCode::InvalidParam, "n_sources must be >= 1");
  if (views_per_source < 2) fail(ErrorCode::InvalidParam, "views_per_source must be >= 2");
  RelationMatrix g(n_sources * views_per_source);
  for (std::size_t k = 0; k < n_sources; ++k) {
    const std::size_t base = k * views_per_source;
    for (std::size_t a = 0; a < views_per_source; ++a) {
      for (std::size_t b = a + 1; b < views_per_source; ++b) g.set_pair(base + a, base + b);
    }
  }
  return g;
}

std::vector<std::pair<std::size_t, std::size_t>> related_pairs(const RelationMatrix& g) {
  if (g.nonzeros() == 0) fail(ErrorCode::EmptyRelation, "relation matrix has no related pairs");
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(g.nonzeros());
  for (const auto& e : g.entries()) pairs.emplace_back(e.row, e.col);
  return pairs;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) fail(ErrorCode::ShapeMismatch, "cosine_similarity on vectors of different length");
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) fail(ErrorCode::DegenerateEmbedding, "cosine_similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

LossOutput vicreg_loss(const Matrix& z, const RelationMatrix& g, const VicRegCoeffs& c) {
  const Eigen::Index n = z.rows();
  const Eigen::Index k = z.cols();
  if (n < 2) fail(ErrorCode::InsufficientBatch, "vicreg_loss needs at least 2 rows, got " + std::to_string(n));
  if (!(c.epsilon > 0.0)) fail(ErrorCode::InvalidParam, "vicreg epsilon must be > 0");
  if (c.alpha < 0 || c.beta < 0 || c.gamma < 0) fail(ErrorCode::InvalidParam, "vicreg coefficients must be >= 0");
  require_finite(z, "Z");
  require_relation_size(g, n);

  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Matrix zc = z.rowwise() - mean;
  const Matrix cov = (zc.transpose() * zc) / static_cast<double>(n - 1);

  // m = dL/dCov (symmetric).
  Matrix m = Matrix::Zero(k, k);
  double l_var = 0.0;
  for (Eigen::Index d = 0; d < k; ++d) {
    const double s = std::sqrt(cov(d, d) + c.epsilon);
    if (1.0 - s > 0.0) {
      l_var += 1.0 - s;
      m(d, d) = -c.alpha / (2.0 * s);
    }
  }
  l_var *= c.alpha;

  double l_cov = 0.0;
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      if (a == b) continue;
      l_cov += cov(a, b) * cov(a, b);
      m(a, b) = 2.0 * c.beta * cov(a, b);
    }
  }
  l_cov *= c.beta;

  LossOutput out;
  // Centering is a projection and zc already has zero column means, so it passes the gradient unchanged.
  out.grad = zc * (m + m.transpose()) / static_cast<double>(n - 1);

  double l_inv = 0.0;
  const double inv_scale = c.gamma / static_cast<double>(n);
  for (const auto& e : g.entries()) {
    const auto i = static_cast<Eigen::Index>(e.row);
    const auto j = static_cast<Eigen::Index>(e.col);
    const Eigen::RowVectorXd diff = z.row(i) - z.row(j);
    l_inv += e.weight * diff.squaredNorm();
    out.grad.row(i) += 2.0 * inv_scale * e.weight * diff;
    out.grad.row(j) -= 2.0 * inv_scale * e.weight * diff;
  }
  l_inv *= inv_scale;

  out.value = l_var + l_cov + l_inv;
  out.terms = {{"L_var", l_var}, {"L_cov", l_cov}, {"L_inv", l_inv}};
  return out;
}

LossOutput simclr_loss(const Matrix& z, const RelationMatrix& g, const SimClrParams& params) {
  const Eigen::Index n = z.rows();
  if (!(params.tau > 0.0)) fail(ErrorCode::InvalidParam, "simclr temperature must be > 0");
  if (n < 2) fail(ErrorCode::InsufficientBatch, "simclr_loss needs at least 2 rows, got " + std::to_string(n));
  require_finite(z, "Z");
  require_relation_size(g, n);

  Eigen::VectorXd norms = z.rowwise().norm();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (norms(i) == 0.0) fail(ErrorCode::DegenerateEmbedding, "row " + std::to_string(i) + " of Z has zero norm");
  }
  const Matrix u = norms.cwiseInverse().asDiagonal() * z;
  const Matrix s = (u * u.transpose()) / params.tau;

  const Matrix gd = g.dense();
  Matrix ghat = Matrix::Zero(n, n);
  Eigen::VectorXd lse(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) mx = std::max(mx, s(i, j));
    }
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) acc += std::exp(s(i, j) - mx);
    }
    lse(i) = mx + std::log(acc);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) ghat(i, j) = std::exp(s(i, j) - lse(i));
    }
  }

  double value = 0.0;
  for (const auto& e : g.entries()) {
    const auto i = static_cast<Eigen::Index>(e.row);
    const auto j = static_cast<Eigen::Index>(e.col);
    value -= e.weight * (s(i, j) - lse(i));
  }

  // dL/ds_ij = -G_ij + (sum_j' G_ij') Ghat_ij
  const Eigen::VectorXd row_mass = gd.rowwise().sum();
  Matrix ds = -gd + row_mass.asDiagonal() * ghat;

  const double positives = g.total_weight();
  double scale = 1.0;
  if (params.reduction == SimClrReduction::MeanOverPositives) {
    if (positives == 0.0) fail(ErrorCode::EmptyRelation, "mean reduction over a relation with no positives");
    scale = 1.0 / positives;
  }

  LossOutput out;
  out.value = value * scale;
  out.terms = {{"L_sum", value}, {"positives", positives}};
  const Matrix du = ((ds + ds.transpose()) * u) * (scale / params.tau);
  out.grad.resize(n, z.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double radial = u.row(i).dot(du.row(i));
    out.grad.row(i) = (du.row(i) - radial * u.row(i)) / norms(i);
  }
  out.estimated_relation = std::move(ghat);
  return out;
}

LossOutput barlow_loss(const Matrix& z_left, const Matrix& z_right, const BarlowParams& params) {
  if (z_left.rows() != z_right.rows() || z_left.cols() != z_right.cols()) {
    fail(ErrorCode::ShapeMismatch, "barlow_loss needs Z_left and Z_right of the same shape");
  }
  const Eigen::Index n = z_left.rows();
  const Eigen::Index k = z_left.cols();
  if (n < 2) fail(ErrorCode::InsufficientBatch, "barlow_loss needs at least 2 rows, got " + std::to_string(n));
  if (!(params.alpha >= 0.0)) fail(ErrorCode::InvalidParam, "barlow alpha must be >= 0");
  require_finite(z_left, "Z_left");
  require_finite(z_right, "Z_right");

  auto normalize = [&](const Matrix& z, const char* side, Matrix& unit, Eigen::RowVectorXd& norms) {
    const Matrix centered = z.rowwise() - z.colwise().mean();
    norms = centered.colwise().norm();
    for (Eigen::Index d = 0; d < k; ++d) {
      if (norms(d) == 0.0) {
        fail(ErrorCode::DegenerateEmbedding,
             std::string("column ") + std::to_string(d) + " of " + side + " has zero variance");
      }
    }
    unit = centered * norms.cwiseInverse().asDiagonal();
  };
  Matrix a, b;
  Eigen::RowVectorXd a_norm, b_norm;
  normalize(z_left, "Z_left", a, a_norm);
  normalize(z_right, "Z_right", b, b_norm);

  const Matrix cc = a.transpose() * b;
  double l_diag = 0.0, l_off = 0.0;
  Matrix dc(k, k);
  for (Eigen::Index p = 0; p < k; ++p) {
    for (Eigen::Index q = 0; q < k; ++q) {
      if (p == q) {
        l_diag += (cc(p, p) - 1.0) * (cc(p, p) - 1.0);
        dc(p, q) = 2.0 * (cc(p, p) - 1.0);
      } else {
        l_off += cc(p, q) * cc(p, q);
        dc(p, q) = 2.0 * params.alpha * cc(p, q);
      }
    }
  }
  l_off *= params.alpha;

  // Back through column normalization, then through centering.
  auto back = [&](const Matrix& unit, const Eigen::RowVectorXd& norms, const Matrix& g_unit) {
    const Eigen::RowVectorXd radial = unit.cwiseProduct(g_unit).colwise().sum();
    Matrix g = (g_unit - unit * radial.asDiagonal()) * norms.cwiseInverse().asDiagonal();
    g.rowwise() -= g.colwise().mean();
    return g;
  };

  LossOutput out;
  out.value = l_diag + l_off;
  out.terms = {{"L_diag", l_diag}, {"L_offdiag", l_off}};
  out.grad = back(a, a_norm, b * dc.transpose());
  out.grad_right = back(b, b_norm, a * dc);
  return out;
}

}  // namespace viewforge
