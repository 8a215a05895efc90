#include <gtest/gtest.h>

#include <random>

#include "oracles/finite_difference.hpp"
#include "support/test_support.hpp"
#include "viewforge/error.hpp"
#include "viewforge/probe.hpp"

using namespace viewforge;
using testing_support::random_matrix;

namespace {

struct Table {
  Matrix x;
  std::vector<std::uint32_t> y;
};

Table separable(int n, int dims, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Table t{random_matrix(n, dims, gen), {}};
  for (int i = 0; i < n; ++i) {
    const std::uint32_t label = static_cast<std::uint32_t>(i % 2);
    t.x(i, 0) = (label ? 2.0 : -2.0) + 0.3 * t.x(i, 0);
    t.y.push_back(label);
  }
  return t;
}

ProbeSpec linear(int classes) {
  ProbeSpec s;
  s.num_classes = classes;
  return s;
}

}  // namespace

TEST(ProbeSpec, Validation) {
  ProbeSpec s = linear(3);
  EXPECT_NO_THROW(validate(s));
  s.kind = ProbeKind::Mlp;
  EXPECT_THROW(validate(s), Error);
  s.hidden = {8};
  EXPECT_NO_THROW(validate(s));
  EXPECT_THROW(validate(linear(1)), Error);
}

TEST(SoftmaxCrossEntropy, GradientFiniteDifference) {
  std::mt19937_64 gen(1);
  const Matrix logits = random_matrix(5, 4, gen);
  const std::vector<std::uint32_t> labels{0, 3, 1, 1, 2};
  Matrix grad;
  softmax_cross_entropy(logits, labels, &grad);
  const Matrix fd = oracle::central_difference([&](const Matrix& x) { return softmax_cross_entropy(x, labels, nullptr); }, logits);
  EXPECT_LT(oracle::relative_error(grad, fd), 1e-8);
}

TEST(OnlineProbe, SeparableReachesPerfectAccuracy) {
  const Table t = separable(64, 5, 2);
  Probe probe(linear(2), 5, SgdConfig{0.1, 0.9, 0.0}, 0);
  ProbeStepResult last;
  for (int i = 0; i < 200; ++i) last = online_probe_step(t.x, t.y, probe);
  EXPECT_EQ(accuracy(probe.predict(t.x), t.y), 1.0);
  EXPECT_GT(last.running_accuracy, 0.9);
}

TEST(OnlineProbe, DoesNotTouchInputs) {
  const Table t = separable(16, 5, 3);
  const Matrix copy = t.x;
  Probe probe(linear(2), 5, SgdConfig{}, 0);
  online_probe_step(t.x, t.y, probe);
  EXPECT_EQ(t.x, copy);
}

TEST(OnlineProbe, ConstantInputGivesPrior) {
  const Matrix h = Matrix::Constant(100, 4, 0.7);
  std::vector<std::uint32_t> y;
  for (int i = 0; i < 100; ++i) y.push_back(i < 70 ? 1u : 0u);
  Probe probe(linear(2), 4, SgdConfig{0.05, 0.9, 0.0}, 0);
  for (int i = 0; i < 300; ++i) online_probe_step(h, y, probe);
  EXPECT_NEAR(accuracy(probe.predict(h), y), 0.7, 1e-12);
}

TEST(OnlineProbe, Errors) {
  Probe probe(linear(3), 2, SgdConfig{}, 0);
  try {
    online_probe_step(Matrix::Zero(2, 2), std::vector<std::uint32_t>{0, 3}, probe);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidLabel);
  }
  EXPECT_THROW(online_probe_step(Matrix::Zero(0, 2), std::vector<std::uint32_t>{}, probe), Error);
  EXPECT_THROW(online_probe_step(Matrix::Zero(2, 3), std::vector<std::uint32_t>{0, 1}, probe), Error);
}

TEST(OfflineProbe, LinearOnSeparable) {
  const Table t = separable(200, 8, 4);
  OfflineProbeOptions o;
  o.epochs = 30;
  const OfflineProbeResult r = offline_probe(t.x, t.y, linear(2), o);
  EXPECT_GE(r.best_val_accuracy, 0.99);
  EXPECT_EQ(r.train_size, 160u);
  EXPECT_EQ(r.val_size, 40u);
  EXPECT_EQ(r.val_curve.size(), 30u);
  EXPECT_GE(r.best_epoch, 1);
}

TEST(OfflineProbe, MlpOverfitsSmallNoisySplit) {
  // Few training points, 30% label noise, a wide MLP: validation peaks early.
  std::mt19937_64 gen(5);
  Table t{random_matrix(60, 10, gen), {}};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < 60; ++i) {
    std::uint32_t y = t.x(i, 0) > 0 ? 1u : 0u;
    if (u(gen) < 0.3) y ^= 1u;
    t.y.push_back(y);
  }
  ProbeSpec s = linear(2);
  s.kind = ProbeKind::Mlp;
  s.hidden = {128};
  OfflineProbeOptions o;
  o.epochs = 300;
  o.batch_size = 8;
  o.optimizer = SgdConfig{0.05, 0.9, 0.0};
  o.train_fraction = 0.5;
  const OfflineProbeResult r = offline_probe(t.x, t.y, s, o);
  EXPECT_LT(r.best_epoch, o.epochs);
  EXPECT_LT(r.val_curve.back(), r.best_val_accuracy);
  EXPECT_GT(r.train_curve.back(), r.val_curve.back());
}

TEST(OfflineProbe, DeterministicCurves) {
  const Table t = separable(80, 4, 6);
  OfflineProbeOptions o;
  o.epochs = 10;
  const auto a = offline_probe(t.x, t.y, linear(2), o), b = offline_probe(t.x, t.y, linear(2), o);
  EXPECT_EQ(a.val_curve, b.val_curve);
  EXPECT_EQ(a.train_curve, b.train_curve);
}

TEST(OfflineProbe, EmptyInput) {
  try {
    offline_probe(Matrix::Zero(0, 3), std::vector<std::uint32_t>{}, linear(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
}
