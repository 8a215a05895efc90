#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles/finite_difference.hpp"
#include "oracles/loss_oracles.hpp"
#include "support/test_support.hpp"
#include "viewforge/error.hpp"
#include "viewforge/losses.hpp"

using namespace viewforge;
using testing_support::random_matrix;
using testing_support::relative_diff;
using testing_support::to_rows;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no viewforge::Error thrown";
  return ErrorCode::ExitEmpty;
}

oracle::Rows dense_rows(const RelationMatrix& g) { return to_rows(g.dense()); }

}  // namespace

TEST(RelationMatrix, PairRelationOneSource) {
  const Matrix d = build_pair_relation(1).dense();
  Matrix expect(2, 2);
  expect << 0, 1, 1, 0;
  EXPECT_EQ(d, expect);
}

TEST(RelationMatrix, PairRelationTwoSources) {
  const RelationMatrix g = build_pair_relation(2);
  ASSERT_EQ(g.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const bool one = (i / 2 == j / 2) && i != j;
      EXPECT_EQ(g.at(i, j), one ? 1.0 : 0.0) << i << "," << j;
    }
}

TEST(RelationMatrix, SymmetricZeroDiagonal) {
  for (std::size_t n : {1u, 3u, 9u}) {
    const Matrix d = build_pair_relation(n, 3).dense();
    EXPECT_EQ(d, d.transpose());
    EXPECT_EQ(d.diagonal().norm(), 0.0);
    EXPECT_EQ(d.sum(), static_cast<double>(n * 6));
  }
}

TEST(RelationMatrix, SetPairValidation) {
  RelationMatrix g(3);
  EXPECT_EQ(code_of([&] { g.set_pair(1, 1); }), ErrorCode::InvalidParam);
  EXPECT_EQ(code_of([&] { g.set_pair(0, 3); }), ErrorCode::InvalidParam);
  EXPECT_EQ(code_of([&] { g.set_pair(0, 1, -1.0); }), ErrorCode::InvalidParam);
  g.set_pair(2, 0, 0.5);
  EXPECT_EQ(g.at(0, 2), 0.5);
  EXPECT_EQ(g.nonzeros(), 2u);
  g.set_pair(0, 2, 0.0);
  EXPECT_EQ(g.nonzeros(), 0u);
}

TEST(RelationMatrix, FromDenseRejectsAsymmetry) {
  Matrix d = Matrix::Zero(3, 3);
  d(0, 1) = 1;
  EXPECT_EQ(code_of([&] { RelationMatrix::from_dense(d); }), ErrorCode::InvalidParam);
  d(1, 0) = 1;
  EXPECT_EQ(RelationMatrix::from_dense(d).dense(), d);
}

TEST(SplitLeftRight, GroupExample) {
  const std::vector<char> s{'a', 'b', 'c', 'd', 'e'};
  RelationMatrix g(5);
  g.set_pair(0, 1);
  g.set_pair(0, 2);
  g.set_pair(1, 2);
  g.set_pair(3, 4);
  const auto [left, right] = split_left_right<char>(s, g);
  EXPECT_EQ(std::string(left.begin(), left.end()), "aabbccde");
  EXPECT_EQ(std::string(right.begin(), right.end()), "bcacabed");
}

TEST(SplitLeftRight, SinglePairAndEmpty) {
  const std::vector<int> s{7, 8};
  const auto [l, r] = split_left_right<int>(s, build_pair_relation(1));
  EXPECT_EQ(l, (std::vector<int>{7, 8}));
  EXPECT_EQ(r, (std::vector<int>{8, 7}));
  EXPECT_EQ(code_of([&] { split_left_right<int>(s, RelationMatrix(2)); }), ErrorCode::EmptyRelation);
}

TEST(SplitLeftRight, LengthEqualsNonzerosForRandomG) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + gen() % 10;
    RelationMatrix g(n);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (gen() % 3 == 0) {
          g.set_pair(i, j);
          count += 2;
        }
    if (count == 0) g.set_pair(0, 1), count = 2;
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    const auto [l, r] = split_left_right<std::size_t>(idx, g);
    EXPECT_EQ(l.size(), count);
    EXPECT_EQ(r.size(), count);
  }
}

TEST(CosineSimilarity, Examples) {
  const std::vector<double> e1{1, 0}, e2{0, 1}, a{1, 2, 3}, b{-1, -2, -3}, z{0, 0};
  EXPECT_DOUBLE_EQ(cosine_similarity(e1, e1), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(e1, e2), 0.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, b), -1.0);
  EXPECT_EQ(code_of([&] { cosine_similarity(e1, z); }), ErrorCode::DegenerateEmbedding);
}

TEST(VicReg, MatchesOracle) {
  std::mt19937_64 gen(10);
  const Matrix z = random_matrix(8, 4, gen);
  const RelationMatrix g = build_pair_relation(4);
  const VicRegCoeffs c;
  const LossOutput out = vicreg_loss(z, g, c);
  const auto t = oracle::vicreg(to_rows(z), dense_rows(g), c.alpha, c.beta, c.gamma, c.epsilon);
  EXPECT_LE(relative_diff(out.value, t.total()), 1e-12);
  EXPECT_LE(relative_diff(out.terms.at("L_var"), t.var), 1e-12);
  EXPECT_LE(relative_diff(out.terms.at("L_cov"), t.cov), 1e-12);
  EXPECT_LE(relative_diff(out.terms.at("L_inv"), t.inv), 1e-12);
}

TEST(VicReg, TermsSumToValue) {
  std::mt19937_64 gen(11);
  const LossOutput out = vicreg_loss(random_matrix(10, 5, gen), build_pair_relation(5), VicRegCoeffs{});
  EXPECT_EQ(out.value, out.terms.at("L_var") + out.terms.at("L_cov") + out.terms.at("L_inv"));
}

TEST(VicReg, IdenticalRows) {
  Matrix z(6, 3);
  z.rowwise() = Eigen::RowVector3d(0.3, -1.0, 2.0);
  const VicRegCoeffs c{25.0, 1.0, 25.0, 1e-4};
  const LossOutput out = vicreg_loss(z, build_pair_relation(3), c);
  EXPECT_EQ(out.terms.at("L_cov"), 0.0);
  EXPECT_EQ(out.terms.at("L_inv"), 0.0);
  EXPECT_LE(std::abs(out.value - c.alpha * 3), c.alpha * 3 * std::sqrt(c.epsilon));
}

TEST(VicReg, WhitenedColumnsNoRelation) {
  // Rows of a scaled orthogonal matrix: unit variance, zero covariance.
  Matrix z(4, 2);
  z << 1, 1, 1, -1, -1, 1, -1, -1;
  z *= std::sqrt(3.0 / 4.0);
  const VicRegCoeffs c{25.0, 1.0, 25.0, 1e-12};
  const LossOutput out = vicreg_loss(z, RelationMatrix(4), c);
  EXPECT_EQ(out.terms.at("L_inv"), 0.0);
  EXPECT_NEAR(out.terms.at("L_var"), 0.0, 1e-9);
  EXPECT_NEAR(out.terms.at("L_cov"), 0.0, 1e-24);
}

TEST(VicReg, GradientFiniteDifference) {
  std::mt19937_64 gen(12);
  for (auto [n, k] : {std::pair{4, 3}, std::pair{8, 8}, std::pair{16, 3}}) {
    const Matrix z = random_matrix(n, k, gen) * 0.7;
    const RelationMatrix g = build_pair_relation(static_cast<std::size_t>(n / 2));
    const VicRegCoeffs c;
    const Matrix fd = oracle::central_difference([&](const Matrix& x) { return vicreg_loss(x, g, c).value; }, z);
    EXPECT_LT(oracle::relative_error(vicreg_loss(z, g, c).grad, fd), 1e-5) << n << "x" << k;
  }
}

TEST(VicReg, Errors) {
  std::mt19937_64 gen(13);
  EXPECT_EQ(code_of([&] { vicreg_loss(random_matrix(1, 3, gen), RelationMatrix(1), {}); }), ErrorCode::InsufficientBatch);
  EXPECT_EQ(code_of([&] { vicreg_loss(random_matrix(4, 3, gen), build_pair_relation(1), {}); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([&] { vicreg_loss(random_matrix(4, 3, gen), build_pair_relation(2), VicRegCoeffs{1, 1, 1, 0}); }),
            ErrorCode::InvalidParam);
  EXPECT_EQ(code_of([&] { vicreg_loss(random_matrix(4, 3, gen), build_pair_relation(2), VicRegCoeffs{-1, 1, 1, 1e-4}); }),
            ErrorCode::InvalidParam);
  Matrix bad = random_matrix(4, 3, gen);
  bad(1, 1) = std::nan("");
  EXPECT_EQ(code_of([&] { vicreg_loss(bad, build_pair_relation(2), {}); }), ErrorCode::InvalidParam);
}

TEST(SimClr, MatchesOracleSumAndMean) {
  std::mt19937_64 gen(20);
  const Matrix z = random_matrix(8, 4, gen);
  const RelationMatrix g = build_pair_relation(4);
  const double sum = simclr_loss(z, g, SimClrParams{0.15, SimClrReduction::Sum}).value;
  const double mean = simclr_loss(z, g, SimClrParams{0.15, SimClrReduction::MeanOverPositives}).value;
  EXPECT_LE(relative_diff(sum, oracle::simclr(to_rows(z), dense_rows(g), 0.15, false)), 1e-12);
  EXPECT_LE(relative_diff(mean, oracle::simclr(to_rows(z), dense_rows(g), 0.15, true)), 1e-12);
  EXPECT_LE(relative_diff(sum / 8.0, mean), 1e-14);
}

TEST(SimClr, EstimatedRelationMatchesOracleAndRowsSumToOne) {
  std::mt19937_64 gen(21);
  const Matrix z = random_matrix(7, 5, gen);
  const LossOutput out = simclr_loss(z, build_pair_relation(1, 7), SimClrParams{0.3});
  const auto expect = oracle::simclr_ghat(to_rows(z), 0.3);
  for (Eigen::Index i = 0; i < 7; ++i) {
    EXPECT_EQ(out.estimated_relation(i, i), 0.0);
    EXPECT_NEAR(out.estimated_relation.row(i).sum(), 1.0, 1e-14);
    for (Eigen::Index j = 0; j < 7; ++j)
      EXPECT_NEAR(out.estimated_relation(i, j), expect[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], 1e-14);
  }
}

TEST(SimClr, IdenticalPairIsZero) {
  Matrix z(2, 3);
  z << 1, 2, 3, 1, 2, 3;
  for (double tau : {0.05, 0.15, 1.0, 10.0}) {
    const LossOutput out = simclr_loss(z, build_pair_relation(1), SimClrParams{tau});
    EXPECT_EQ(out.value, 0.0);
    EXPECT_EQ(out.estimated_relation(0, 1), 1.0);
    EXPECT_EQ(out.estimated_relation(1, 0), 1.0);
  }
}

TEST(SimClr, GradientFiniteDifference) {
  std::mt19937_64 gen(22);
  for (auto red : {SimClrReduction::Sum, SimClrReduction::MeanOverPositives}) {
    for (auto [n, k] : {std::pair{4, 3}, std::pair{8, 8}, std::pair{16, 3}}) {
      const Matrix z = random_matrix(n, k, gen);
      const RelationMatrix g = build_pair_relation(static_cast<std::size_t>(n / 2));
      const SimClrParams p{0.15, red};
      const Matrix fd = oracle::central_difference([&](const Matrix& x) { return simclr_loss(x, g, p).value; }, z);
      EXPECT_LT(oracle::relative_error(simclr_loss(z, g, p).grad, fd), 1e-5) << n << "x" << k;
    }
  }
}

TEST(SimClr, GradientMatchesDifferencesAtOneEMinusTen) {
  std::mt19937_64 gen(23);
  const Matrix z = random_matrix(8, 4, gen);
  const RelationMatrix g = build_pair_relation(4);
  const SimClrParams p{0.15};
  const Matrix fd = oracle::central_difference([&](const Matrix& x) { return simclr_loss(x, g, p).value; }, z, 1e-4);
  EXPECT_LT(oracle::relative_error(simclr_loss(z, g, p).grad, fd), 1e-7);
}

TEST(SimClr, IncreasingPositiveSimilarityDecreasesLoss) {
  std::mt19937_64 gen(24);
  Matrix z = random_matrix(6, 4, gen);
  const RelationMatrix g = build_pair_relation(3);
  const SimClrParams p{0.5};
  double prev = simclr_loss(z, g, p).value;
  const Eigen::RowVectorXd target = z.row(0) / z.row(0).norm();
  for (int step = 1; step <= 5; ++step) {
    Matrix moved = z;
    const double t = step / 5.0;
    moved.row(1) = (1 - t) * z.row(1) / z.row(1).norm() + t * target;
    const double v = simclr_loss(moved, g, p).value;
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(SimClr, RowRescalingLeavesEstimateUnchanged) {
  std::mt19937_64 gen(25);
  const Matrix z = random_matrix(6, 3, gen);
  Matrix scaled = z;
  for (Eigen::Index i = 0; i < 6; ++i) scaled.row(i) *= 0.1 + 3.0 * static_cast<double>(i);
  const RelationMatrix g = build_pair_relation(3);
  const LossOutput a = simclr_loss(z, g, {}), b = simclr_loss(scaled, g, {});
  EXPECT_LT((a.estimated_relation - b.estimated_relation).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(SimClr, StableAtTinyTemperature) {
  std::mt19937_64 gen(26);
  const LossOutput out = simclr_loss(random_matrix(8, 4, gen), build_pair_relation(4), SimClrParams{1e-3});
  EXPECT_TRUE(std::isfinite(out.value));
  EXPECT_TRUE(out.grad.allFinite());
}

TEST(SimClr, Errors) {
  std::mt19937_64 gen(27);
  Matrix z = random_matrix(4, 3, gen);
  EXPECT_EQ(code_of([&] { simclr_loss(z, build_pair_relation(2), SimClrParams{0.0}); }), ErrorCode::InvalidParam);
  EXPECT_EQ(code_of([&] { simclr_loss(z, build_pair_relation(2), SimClrParams{-1.0}); }), ErrorCode::InvalidParam);
  EXPECT_EQ(code_of([&] { simclr_loss(z, RelationMatrix(4), SimClrParams{0.1, SimClrReduction::MeanOverPositives}); }),
            ErrorCode::EmptyRelation);
  EXPECT_EQ(code_of([&] { simclr_loss(z.topRows(1), RelationMatrix(1), {}); }), ErrorCode::InsufficientBatch);
  z.row(2).setZero();
  EXPECT_EQ(code_of([&] { simclr_loss(z, build_pair_relation(2), {}); }), ErrorCode::DegenerateEmbedding);
}

TEST(Barlow, MatchesOracle) {
  std::mt19937_64 gen(30);
  const Matrix l = random_matrix(8, 4, gen), r = random_matrix(8, 4, gen);
  const LossOutput out = barlow_loss(l, r, BarlowParams{0.0025});
  EXPECT_LE(relative_diff(out.value, oracle::barlow(to_rows(l), to_rows(r), 0.0025)), 1e-12);
  EXPECT_LE(relative_diff(out.value, out.terms.at("L_diag") + out.terms.at("L_offdiag")), 1e-15);
}

TEST(Barlow, IdenticalOrthogonalViewsAreZero) {
  Matrix z(4, 2);
  z << 1, 1, 1, -1, -1, 1, -1, -1;
  EXPECT_EQ(barlow_loss(z, z, BarlowParams{0.5}).value, 0.0);
}

TEST(Barlow, IdenticalViewsOnlyOffDiagonal) {
  std::mt19937_64 gen(31);
  const Matrix z = random_matrix(10, 4, gen);
  const LossOutput out = barlow_loss(z, z, BarlowParams{0.01});
  EXPECT_NEAR(out.terms.at("L_diag"), 0.0, 1e-28);
  EXPECT_LE(relative_diff(out.value, oracle::barlow(to_rows(z), to_rows(z), 0.01)), 1e-12);
  EXPECT_LE(relative_diff(out.value, out.terms.at("L_offdiag")), 1e-12);
  EXPECT_GT(out.value, 0.0);
}

TEST(Barlow, SwapSymmetry) {
  std::mt19937_64 gen(32);
  const Matrix l = random_matrix(9, 5, gen), r = random_matrix(9, 5, gen);
  EXPECT_LE(relative_diff(barlow_loss(l, r, {}).value, barlow_loss(r, l, {}).value), 1e-14);
}

TEST(Barlow, GradientFiniteDifference) {
  std::mt19937_64 gen(33);
  for (auto [n, k] : {std::pair{4, 3}, std::pair{8, 8}, std::pair{16, 3}}) {
    const Matrix l = random_matrix(n, k, gen), r = random_matrix(n, k, gen);
    const BarlowParams p{0.0051};
    const LossOutput out = barlow_loss(l, r, p);
    const Matrix fdl = oracle::central_difference([&](const Matrix& x) { return barlow_loss(x, r, p).value; }, l);
    const Matrix fdr = oracle::central_difference([&](const Matrix& x) { return barlow_loss(l, x, p).value; }, r);
    EXPECT_LT(oracle::relative_error(out.grad, fdl), 1e-5);
    EXPECT_LT(oracle::relative_error(out.grad_right, fdr), 1e-5);
  }
}

TEST(Barlow, Errors) {
  std::mt19937_64 gen(34);
  Matrix l = random_matrix(6, 3, gen), r = random_matrix(6, 3, gen);
  EXPECT_EQ(code_of([&] { barlow_loss(l, r.leftCols(2), {}); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([&] { barlow_loss(l, r, BarlowParams{-0.1}); }), ErrorCode::InvalidParam);
  EXPECT_EQ(code_of([&] { barlow_loss(l.topRows(1), r.topRows(1), {}); }), ErrorCode::InsufficientBatch);
  l.col(1).setConstant(4.0);
  EXPECT_EQ(code_of([&] { barlow_loss(l, r, {}); }), ErrorCode::DegenerateEmbedding);
}
