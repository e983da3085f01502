#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fairgraph/adam.hpp"
#include "fairgraph/dense_net.hpp"
#include "fairgraph/grad_check.hpp"
#include "fairgraph/kernels.hpp"
#include "fairgraph/losses.hpp"
#include "fairgraph/rng.hpp"
#include "test_util.hpp"

using namespace fairgraph;
using namespace fairgraph::testing_util;

namespace {

Matrix<double> random_matrix(size_t rows, size_t cols, Rng& rng, double scale = 1.0) {
  Matrix<double> m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-scale, scale);
  return m;
}

// sum of w * y over outputs: a scalar probe of a network's output.
double weighted_sum(const Matrix<double>& y, const Matrix<double>& w) {
  double s = 0.0;
  for (size_t i = 0; i < y.size(); ++i) s += y.data()[i] * w.data()[i];
  return s;
}

}  // namespace

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng c(43);
  EXPECT_NE(Rng(42).next_u64(), c.next_u64());
}

TEST(Rng, ForkDoesNotAdvanceParent) {
  Rng a(7), b(7);
  (void)a.fork(3);
  EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_NE(Rng(7).fork(1).next_u64(), Rng(7).fork(2).next_u64());
}

TEST(Rng, IndexStaysInRange) {
  Rng rng(1);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 5000; ++i) ++counts[rng.index(5)];
  for (int c : counts) EXPECT_GT(c, 800);
}

TEST(DenseNet, IdentityLayerAppliesLeakyRelu) {
  Rng rng(1);
  DenseNetConfig cfg;
  cfg.widths = {2, 2};
  cfg.activate_output = true;
  DenseNet<double> net(cfg, rng);
  net.weight(0).value = Matrix<double>::from_rows({{1, 0}, {0, 1}});
  net.bias(0).value.fill(0.0);
  const auto y = net.forward(Matrix<double>::from_rows({{2, -1}}), Mode::kEval, nullptr);
  EXPECT_DOUBLE_EQ(y(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(y(0, 1), -0.01);
}

TEST(DenseNet, MatchesStraightLineRecomputation) {
  Rng rng(5);
  DenseNet<double> net(DenseNetConfig::mlp(3, 4, 2, 2), rng);
  const auto x = random_matrix(6, 3, rng);
  const auto y = net.forward(x, Mode::kEval, nullptr);

  const auto& w0 = net.weight(0).value;
  const auto& b0 = net.bias(0).value;
  const auto& w1 = net.weight(1).value;
  const auto& b1 = net.bias(1).value;
  for (size_t n = 0; n < x.rows(); ++n) {
    std::vector<double> h(4);
    for (size_t o = 0; o < 4; ++o) {
      double acc = b0(0, o);
      for (size_t i = 0; i < 3; ++i) acc += w0(o, i) * x(n, i);
      h[o] = acc < 0 ? 0.01 * acc : acc;
    }
    for (size_t o = 0; o < 2; ++o) {
      double acc = b1(0, o);
      for (size_t i = 0; i < 4; ++i) acc += w1(o, i) * h[i];
      EXPECT_NEAR(y(n, o), acc, 1e-12);
    }
  }
}

TEST(DenseNet, EvalModeIsDeterministic) {
  Rng rng(2);
  DenseNetConfig cfg = DenseNetConfig::mlp(4, 8, 3, 3);
  cfg.dropout = 0.3;
  cfg.batchnorm = true;
  DenseNet<double> net(cfg, rng);
  const auto x = random_matrix(5, 4, rng);
  EXPECT_EQ(net.forward(x, Mode::kEval, nullptr), net.forward(x, Mode::kEval, nullptr));
  EXPECT_EQ(net.predict(x), net.forward(x, Mode::kEval, nullptr));
}

TEST(DenseNet, DropoutOnlyInTrainMode) {
  Rng rng(3);
  DenseNetConfig cfg = DenseNetConfig::mlp(4, 16, 2, 2);
  cfg.dropout = 0.5;
  DenseNet<double> net(cfg, rng);
  const auto x = random_matrix(8, 4, rng);
  Rng r1(9), r2(9), r3(10);
  const auto a = net.forward(x, Mode::kTrain, &r1);
  const auto b = net.forward(x, Mode::kTrain, &r2);
  const auto c = net.forward(x, Mode::kTrain, &r3);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(code_of([&] { net.forward(x, Mode::kTrain, nullptr); }), ErrorCode::kUsage);
}

TEST(DenseNet, Errors) {
  Rng rng(4);
  DenseNet<double> net(DenseNetConfig::mlp(3, 4, 2, 2), rng);
  EXPECT_EQ(code_of([&] { net.forward(Matrix<double>(2, 4), Mode::kEval, nullptr); }), ErrorCode::kShape);
  Matrix<double> bad(1, 3);
  bad(0, 1) = std::nan("");
  EXPECT_EQ(code_of([&] { net.forward(bad, Mode::kEval, nullptr); }), ErrorCode::kNumericInput);
  DenseNet<double>::Pass pass;
  EXPECT_EQ(code_of([&] { net.backward(pass, Matrix<double>(1, 2)); }), ErrorCode::kState);
}

TEST(DenseNet, LinearBackwardIsTransposedWeight) {
  Rng rng(6);
  DenseNet<double> net(DenseNetConfig::mlp(3, 0, 2, 1), rng);
  const auto x = random_matrix(1, 3, rng);
  DenseNet<double>::Pass pass;
  net.forward(x, Mode::kTrain, nullptr, &pass);
  const auto g = Matrix<double>::from_rows({{0.5, -2.0}});
  const auto dx = net.backward(pass, g);
  const auto& w = net.weight(0).value;
  for (size_t i = 0; i < 3; ++i) EXPECT_NEAR(dx(0, i), w(0, i) * 0.5 + w(1, i) * -2.0, 1e-15);
}

TEST(DenseNet, ZeroUpstreamGivesZeroParameterGradients) {
  Rng rng(7);
  DenseNet<double> net(DenseNetConfig::mlp(3, 5, 2, 3), rng);
  DenseNet<double>::Pass pass;
  net.forward(random_matrix(4, 3, rng), Mode::kTrain, nullptr, &pass);
  net.zero_grad();
  net.backward(pass, Matrix<double>(4, 2));
  for (auto* p : net.parameters()) {
    for (double v : p->grad.values()) EXPECT_EQ(v, 0.0);
  }
}

class DenseNetGradient : public ::testing::TestWithParam<int> {};

TEST_P(DenseNetGradient, MatchesFiniteDifferences) {
  Rng rng(100 + GetParam());
  DenseNetConfig cfg = DenseNetConfig::mlp(4, 6, 3, 3);
  cfg.batchnorm = GetParam() % 2 == 1;
  cfg.dropout = GetParam() >= 2 ? 0.25 : 0.0;
  DenseNet<double> net(cfg, rng);
  const auto x = random_matrix(5, 4, rng);
  const auto probe = random_matrix(5, 3, rng);
  const uint64_t seed = rng.next_u64();
  auto loss = [&] {
    Rng drop(seed);
    return weighted_sum(net.forward(x, Mode::kTrain, &drop), probe);
  };
  auto grads = [&] {
    net.zero_grad();
    Rng drop(seed);
    DenseNet<double>::Pass pass;
    net.forward(x, Mode::kTrain, &drop, &pass);
    net.backward(pass, probe);
  };
  // Biases feeding a batchnorm have an exact zero gradient; their central
  // differences are ~1e-10 of rounding noise, so the denominator floor is
  // raised for those variants.
  GradCheckOptions options;
  if (cfg.batchnorm) options.floor = 1e-5;
  const auto report = grad_check(net.parameters(), loss, grads, 1e-4, options);
  EXPECT_TRUE(report.pass) << report.max_relative_error;
}

INSTANTIATE_TEST_SUITE_P(Variants, DenseNetGradient, ::testing::Values(0, 1, 2, 3));

TEST(DenseNet, InputGradientMatchesFiniteDifferences) {
  Rng rng(11);
  DenseNet<double> net(DenseNetConfig::mlp(3, 5, 2, 3), rng);
  auto x = random_matrix(4, 3, rng);
  const auto probe = random_matrix(4, 2, rng);
  DenseNet<double>::Pass pass;
  net.forward(x, Mode::kTrain, nullptr, &pass);
  const auto dx = net.backward(pass, probe);
  const double h = 1e-6;
  for (size_t i = 0; i < x.size(); ++i) {
    const double keep = x.data()[i];
    x.data()[i] = keep + h;
    const double up = weighted_sum(net.forward(x, Mode::kEval, nullptr), probe);
    x.data()[i] = keep - h;
    const double down = weighted_sum(net.forward(x, Mode::kEval, nullptr), probe);
    x.data()[i] = keep;
    EXPECT_NEAR(dx.data()[i], (up - down) / (2 * h), 1e-6);
  }
}

TEST(BatchNorm, RunningStatisticsUsedInEval) {
  BatchNorm<double> bn(2);
  const auto x = Matrix<double>::from_rows({{1, 10}, {3, 30}});
  BatchNorm<double>::Pass pass;
  const auto y = bn.forward(x, Mode::kTrain, &pass);
  EXPECT_NEAR(y(0, 0), -1.0, 1e-4);
  EXPECT_NEAR(y(1, 1), 1.0, 1e-4);
  // momentum 0.1 from (0, 1): mean 0.2, biased variance 1 -> 0.9 + 0.1 * 1
  EXPECT_NEAR(bn.running_mean()(0, 0), 0.2, 1e-12);
  const auto e1 = bn.forward(x, Mode::kEval, nullptr);
  const auto e2 = bn.forward(x, Mode::kEval, nullptr);
  EXPECT_EQ(e1, e2);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Parameter<double> p("p", 2, 2);
  p.value = Matrix<double>::from_rows({{1, 2}, {3, 4}});
  const auto before = p.value;
  Adam<double> opt({&p});
  opt.step();
  EXPECT_EQ(p.value, before);
  EXPECT_EQ(opt.step_count(), 1U);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Parameter<double> p("p", 1, 1);
  p.value(0, 0) = 0.5;
  p.grad(0, 0) = 1.0;
  Adam<double> opt({&p});
  opt.step();
  // m_hat = 1, v_hat = 1: step = lr * 1 / (1 + eps)
  EXPECT_NEAR(p.value(0, 0), 0.5 - 0.001 / (1.0 + 1e-8), 1e-15);
  EXPECT_EQ(opt.first_moment(0).rows(), 1U);
}

TEST(Adam, RecurrenceOverSeveralSteps) {
  Parameter<double> p("p", 1, 1);
  Adam<double> opt({&p});
  double m = 0, v = 0, x = 0;
  const double grads[] = {0.3, -1.2, 2.5, 0.0, 0.7};
  for (int t = 1; t <= 5; ++t) {
    const double g = grads[t - 1];
    p.grad(0, 0) = g;
    opt.step();
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t));
    const double vh = v / (1 - std::pow(0.999, t));
    x -= 0.001 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(p.value(0, 0), x, 1e-15);
  }
}

TEST(Adam, IdenticalTensorsGetIdenticalUpdates) {
  Parameter<double> a("a", 2, 3), b("b", 2, 3);
  Rng rng(1);
  for (size_t i = 0; i < 6; ++i) {
    a.value.data()[i] = b.value.data()[i] = rng.uniform();
    a.grad.data()[i] = b.grad.data()[i] = rng.uniform(-1, 1);
  }
  Adam<double> opt({&a, &b});
  opt.step();
  EXPECT_EQ(a.value, b.value);
}

TEST(Adam, ShapeMismatchIsRejected) {
  Parameter<double> p("p", 2, 2);
  p.grad.resize(1, 2);
  EXPECT_EQ(code_of([&] {
              Adam<double> opt({&p});
              opt.step();
            }),
            ErrorCode::kShape);
}

TEST(ClassificationHead, UniformLogits) {
  const std::vector<double> logits = {0.0, 0.0};
  const auto c = classification_head(logits, 0);
  EXPECT_NEAR(c.loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(c.probabilities[0], 0.5, 1e-15);
  EXPECT_NEAR(c.probabilities[1], 0.5, 1e-15);
}

TEST(ClassificationHead, SaturatedCorrect) {
  const std::vector<double> logits = {10.0, -10.0};
  EXPECT_LT(classification_head(logits, 0).loss, 1e-8);
}

TEST(ClassificationHead, MatchesStraightLineSoftmax) {
  Rng rng(3);
  std::vector<double> logits(5);
  for (double& v : logits) v = rng.uniform(-4, 4);
  double z = 0;
  for (double v : logits) z += std::exp(v);
  const auto c = classification_head(logits, 3);
  EXPECT_NEAR(c.loss, -std::log(std::exp(logits[3]) / z), 1e-12);
  double sum = 0;
  for (double p : c.probabilities) {
    EXPECT_GE(p, 0.0);
    sum += p;
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
  EXPECT_EQ(code_of([&] { classification_head(logits, 5); }), ErrorCode::kIndex);
}

TEST(SoftmaxCrossEntropy, GradientIsProbabilitiesMinusOneHot) {
  const auto logits = Matrix<double>::from_rows({{1.0, 2.0, 0.5}, {-1.0, 0.0, 3.0}});
  const std::vector<int32_t> labels = {1, 0};
  Matrix<double> grad, probs;
  const double loss = softmax_cross_entropy(logits, labels, 2.0, &grad, &probs);
  double expect = 0;
  for (size_t r = 0; r < 2; ++r) {
    const auto c = classification_head(std::vector<double>(logits.row(r).begin(), logits.row(r).end()),
                                       static_cast<size_t>(labels[r]));
    expect += c.loss;
    for (size_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(probs(r, j), c.probabilities[j], 1e-15);
      EXPECT_NEAR(grad(r, j), 2.0 * (c.probabilities[j] - (j == size_t(labels[r]) ? 1.0 : 0.0)), 1e-15);
    }
  }
  EXPECT_NEAR(loss, expect, 1e-12);
}

TEST(MarginLoss, HingeMean) {
  const std::vector<double> neg = {0.0, 2.0, -5.0};
  // max(0, 1-1+0)=0, max(0, 1-1+2)=2, 0
  EXPECT_DOUBLE_EQ(margin_loss(1.0, neg), 2.0 / 3.0);
}

TEST(GradCheck, SquareFunctionPasses) {
  Parameter<double> x("x", 1, 1);
  x.value(0, 0) = 3.0;
  auto loss = [&] { return x.value(0, 0) * x.value(0, 0); };
  auto grads = [&] { x.grad(0, 0) = 2 * x.value(0, 0); };
  const auto report = grad_check({&x}, loss, grads, 1e-4);
  EXPECT_TRUE(report.pass);
  EXPECT_NEAR(report.per_parameter.at(0).analytic, 6.0, 1e-12);
  EXPECT_NEAR(report.per_parameter.at(0).numeric, 6.0, 1e-6);
}

TEST(GradCheck, CorruptedGradientFails) {
  Parameter<double> x("x", 1, 1);
  x.value(0, 0) = 3.0;
  auto loss = [&] { return x.value(0, 0) * x.value(0, 0); };
  auto grads = [&] { x.grad(0, 0) = 2 * 2 * x.value(0, 0); };
  const auto report = grad_check({&x}, loss, grads, 1e-4);
  EXPECT_FALSE(report.pass);
  EXPECT_EQ(report.pass, report.max_relative_error <= report.tolerance);
}

TEST(GradCheck, NonDeterministicLossIsRejected) {
  Parameter<double> x("x", 1, 1);
  int calls = 0;
  auto loss = [&] { return static_cast<double>(++calls); };
  auto grads = [&] { x.grad(0, 0) = 0; };
  EXPECT_EQ(code_of([&] { grad_check({&x}, loss, grads, 1e-4); }), ErrorCode::kCheck);
}

// The parallel kernels must reproduce the serial reference bit for bit.
class KernelEquivalence : public ::testing::TestWithParam<std::pair<size_t, size_t>> {};

TEST_P(KernelEquivalence, SerialAndParallelAgreeBitwise) {
  const auto [rows, width] = GetParam();
  Rng rng(rows * 31 + width);
  Matrix<float> x(rows, width), w(width + 3, width), dy(rows, width + 3);
  for (float& v : x.values()) v = static_cast<float>(rng.uniform(-1, 1));
  for (float& v : w.values()) v = static_cast<float>(rng.uniform(-1, 1));
  for (float& v : dy.values()) v = static_cast<float>(rng.uniform(-1, 1));
  std::vector<float> b(width + 3);
  for (float& v : b) v = static_cast<float>(rng.uniform(-1, 1));

  Matrix<float> ys, yp;
  kernels::serial::affine_forward<float>(x, w, b, ys);
  kernels::parallel::affine_forward<float>(x, w, b, yp);
  EXPECT_EQ(ys, yp);

  Matrix<float> dxs, dxp;
  kernels::serial::affine_backward_input(dy, w, dxs);
  kernels::parallel::affine_backward_input(dy, w, dxp);
  EXPECT_EQ(dxs, dxp);

  Matrix<float> dws(w.rows(), w.cols()), dwp(w.rows(), w.cols());
  std::vector<float> dbs(b.size()), dbp(b.size());
  kernels::serial::affine_backward_params<float>(dy, x, dws, dbs);
  kernels::parallel::affine_backward_params<float>(dy, x, dwp, dbp);
  EXPECT_EQ(dws, dwp);
  EXPECT_EQ(dbs, dbp);

  Matrix<float> a2(rows, width);
  for (float& v : a2.values()) v = static_cast<float>(rng.uniform(-1, 1));
  std::vector<float> ds(rows), dp(rows);
  kernels::serial::row_dot<float>(x, a2, ds);
  kernels::parallel::row_dot<float>(x, a2, dp);
  EXPECT_EQ(ds, dp);
}

INSTANTIATE_TEST_SUITE_P(Shapes, KernelEquivalence,
                         ::testing::Values(std::make_pair(size_t{1}, size_t{1}), std::make_pair(size_t{7}, size_t{5}),
                                           std::make_pair(size_t{300}, size_t{32}),
                                           std::make_pair(size_t{2048}, size_t{17})));

TEST(Kernels, AffineMatchesNaiveProduct) {
  Rng rng(8);
  const auto x = random_matrix(4, 3, rng);
  const auto w = random_matrix(2, 3, rng);
  const std::vector<double> b = {0.25, -0.5};
  Matrix<double> y;
  kernels::affine_forward<double>(x, w, b, y);
  for (size_t n = 0; n < 4; ++n) {
    for (size_t o = 0; o < 2; ++o) {
      double acc = b[o];
      for (size_t i = 0; i < 3; ++i) acc += w(o, i) * x(n, i);
      EXPECT_NEAR(y(n, o), acc, 1e-14);
    }
  }
}
