#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "fairgraph/encoders.hpp"
#include "fairgraph/fairness.hpp"
#include "fairgraph/grad_check.hpp"
#include "fairgraph/losses.hpp"
#include "test_util.hpp"

using namespace fairgraph;
using namespace fairgraph::testing_util;

namespace {

std::vector<Triple> random_triples(size_t count, size_t nodes, size_t relations, Rng& rng) {
  std::vector<Triple> out;
  while (out.size() < count) {
    Triple t{static_cast<NodeId>(rng.index(nodes)), static_cast<RelationId>(rng.index(relations)),
             static_cast<NodeId>(rng.index(nodes))};
    if (t.head != t.tail) out.push_back(t);
  }
  return out;
}

void randomize(EdgeModel<double>& model, Rng& rng) {
  for (auto* p : model.parameters()) {
    for (double& v : p->value.values()) v = rng.uniform(-1, 1);
  }
}

}  // namespace

TEST(TransD, EncodeIsIdentityWithoutProjections) {
  Rng rng(1);
  TransDModel<double> m(4, 2, 4, rng);
  randomize(m, rng);
  const Triple t{0, 1, 2};
  m.relation_projections().value.fill(0.0);
  auto enc = transd_encode(m, 0, t, Slot::kHead);
  for (size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(enc[j], m.embeddings().value(0, j));

  randomize(m, rng);
  for (double& v : m.node_projections().value.row(2)) v = 0.0;
  enc = transd_encode(m, 2, t, Slot::kTail);
  for (size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(enc[j], m.embeddings().value(2, j));
}

TEST(TransD, EncodeMatchesProjectionMatrix) {
  Rng rng(2);
  TransDModel<double> m(3, 2, 4, rng);
  randomize(m, rng);
  const Triple t{1, 1, 2};
  const auto enc = transd_encode(m, 1, t, Slot::kHead);
  const auto rp = m.relation_projections().value.row(1);
  const auto vp = m.node_projections().value.row(1);
  const auto v = m.embeddings().value.row(1);
  for (size_t i = 0; i < 4; ++i) {
    double acc = 0;
    for (size_t j = 0; j < 4; ++j) acc += (rp[i] * vp[j] + (i == j ? 1.0 : 0.0)) * v[j];
    EXPECT_NEAR(enc[i], acc, 1e-14);
  }
}

TEST(TransD, ScoreIsNegativeTranslationDistance) {
  Rng rng(3);
  TransDModel<double> m(2, 1, 4, rng);
  m.node_projections().value.fill(0.0);
  m.relation_projections().value.fill(0.0);
  m.embeddings().value = Matrix<double>::from_rows({{1, 1, 1, 1}, {0, 0, 1, 1}});
  m.relation_embeddings().value = Matrix<double>::from_rows({{2, 3, 0, 0}});
  // head + r - tail = (3, 4, 0, 0)
  EXPECT_NEAR(transd_score(m, Triple{0, 0, 1}), -5.0, 1e-12);
  m.relation_embeddings().value = Matrix<double>::from_rows({{-1, -1, 0, 0}});
  EXPECT_NEAR(transd_score(m, Triple{0, 0, 1}), 0.0, 1e-12);
}

TEST(TransD, ScoreMatchesIndependentNorm) {
  Rng rng(4);
  TransDModel<double> m(5, 3, 6, rng);
  randomize(m, rng);
  for (int trial = 0; trial < 10; ++trial) {
    const Triple t{static_cast<NodeId>(rng.index(5)), static_cast<RelationId>(rng.index(3)),
                   static_cast<NodeId>(rng.index(5))};
    const auto h = transd_encode(m, t.head, t, Slot::kHead);
    const auto tl = transd_encode(m, t.tail, t, Slot::kTail);
    double sq = 0;
    for (size_t j = 0; j < 6; ++j) {
      const double d = h[j] + m.relation_embeddings().value(t.relation, j) - tl[j];
      sq += d * d;
    }
    EXPECT_NEAR(transd_score(m, t), -std::sqrt(sq), 1e-12);
  }
}

TEST(TransD, TranslationConsistent) {
  Rng rng(5);
  TransDModel<double> m(2, 1, 3, rng);
  randomize(m, rng);
  m.node_projections().value.fill(0.0);
  const std::vector<Triple> t = {{0, 0, 1}};
  Matrix<double> head(1, 3), tail(1, 3);
  for (size_t j = 0; j < 3; ++j) {
    head(0, j) = m.embeddings().value(0, j);
    tail(0, j) = m.embeddings().value(1, j);
  }
  const double base = m.score(t, head, tail)[0];
  for (size_t j = 0; j < 3; ++j) {
    head(0, j) += 0.7 * (j + 1);
    tail(0, j) += 0.7 * (j + 1);
  }
  EXPECT_NEAR(m.score(t, head, tail)[0], base, 1e-12);
}

TEST(MarginLoss, Examples) {
  EXPECT_DOUBLE_EQ(margin_loss(5, std::vector<double>{3}), 0.0);
  EXPECT_DOUBLE_EQ(margin_loss(3, std::vector<double>{3}), 1.0);
  EXPECT_DOUBLE_EQ(margin_loss(0, std::vector<double>{0.5, -2}), 0.75);
}

TEST(RatingDistribution, UniformCases) {
  Rng rng(6);
  Matrix<double> b1(3, 3), b2(3, 3), coeff(5, 2);
  for (double& v : b1.values()) v = rng.uniform(-1, 1);
  for (double& v : b2.values()) v = rng.uniform(-1, 1);
  for (size_t r = 0; r < 5; ++r) {
    coeff(r, 0) = 0.3;
    coeff(r, 1) = -0.2;
  }
  const std::vector<double> u = {0.5, -1.0, 2.0}, v = {1.0, 0.1, -0.3}, zero = {0, 0, 0};
  for (double p : rating_distribution(u, v, b1, b2, coeff)) EXPECT_NEAR(p, 0.2, 1e-15);
  for (size_t r = 0; r < 5; ++r) coeff(r, 0) = rng.uniform(-1, 1);
  for (double p : rating_distribution(zero, v, b1, b2, coeff)) EXPECT_NEAR(p, 0.2, 1e-15);
}

TEST(RatingDistribution, MatchesSoftmaxOfBilinearForms) {
  Rng rng(7);
  Matrix<double> b1(3, 3), b2(3, 3), coeff(5, 2);
  for (double& v : b1.values()) v = rng.uniform(-1, 1);
  for (double& v : b2.values()) v = rng.uniform(-1, 1);
  for (double& v : coeff.values()) v = rng.uniform(-1, 1);
  const std::vector<double> u = {0.4, -0.7, 1.1}, v = {-0.2, 0.9, 0.5};
  std::vector<double> logits(5);
  for (size_t r = 0; r < 5; ++r) {
    double acc = 0;
    for (size_t i = 0; i < 3; ++i) {
      for (size_t j = 0; j < 3; ++j) acc += u[i] * (coeff(r, 0) * b1(i, j) + coeff(r, 1) * b2(i, j)) * v[j];
    }
    logits[r] = acc;
  }
  double z = 0;
  for (double l : logits) z += std::exp(l);
  const auto p = rating_distribution(u, v, b1, b2, coeff);
  double sum = 0;
  for (size_t r = 0; r < 5; ++r) {
    EXPECT_NEAR(p[r], std::exp(logits[r]) / z, 1e-14);
    EXPECT_NEAR(rating_loss(p, r), -std::log(p[r]), 1e-14);
    sum += p[r];
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(RatingLoss, Examples) {
  const std::vector<double> uniform(5, 0.2);
  EXPECT_NEAR(rating_loss(uniform, 2), std::log(5.0), 1e-15);
  const std::vector<double> point = {0, 0, 1, 0, 0};
  EXPECT_DOUBLE_EQ(rating_loss(point, 2), 0.0);
}

TEST(ExpectedRating, Examples) {
  const std::vector<double> values = {1, 2, 3, 4, 5};
  EXPECT_NEAR(expected_rating(std::vector<double>(5, 0.2), values), 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(expected_rating(std::vector<double>{0, 0, 0, 1, 0}, values), 4.0);
  EXPECT_DOUBLE_EQ(expected_rating(std::vector<double>{0.5, 0, 0, 0, 0.5}, values), 3.0);
}

TEST(DotScore, Examples) {
  EXPECT_DOUBLE_EQ(dot_score(std::vector<double>{1, 0}, std::vector<double>{0, 3}), 0.0);
  EXPECT_DOUBLE_EQ(dot_score(std::vector<double>{1, 2}, std::vector<double>{1, 2}), 5.0);
  Rng rng(8);
  std::vector<double> a(7), b(7);
  for (auto& v : a) v = rng.uniform(-1, 1);
  for (auto& v : b) v = rng.uniform(-1, 1);
  EXPECT_NEAR(dot_score(a, b), std::inner_product(a.begin(), a.end(), b.begin(), 0.0), 1e-15);
}

// Every score family on a random 10-node instance, checked against central
// differences at 64-bit precision.
class FamilyGradient : public ::testing::TestWithParam<Family> {};

TEST_P(FamilyGradient, EdgeLossPassesGradCheck) {
  const Family family = GetParam();
  Rng rng(static_cast<uint64_t>(family) + 20);
  const size_t relations = family == Family::kRating ? 5 : 3;
  auto model = make_model<double>(family, 10, relations, 4, rng);
  const auto positives = random_triples(6, 10, relations, rng);
  const auto negatives = random_triples(6 * 3, 10, relations, rng);
  auto loss = [&] {
    return combined_loss<double>(*model, nullptr, nullptr, nullptr, positives, negatives, 0, 0.0, Mode::kTrain,
                                 nullptr, false)
        .total;
  };
  auto grads = [&] {
    model->zero_grad();
    combined_loss<double>(*model, nullptr, nullptr, nullptr, positives, negatives, 0, 0.0, Mode::kTrain, nullptr,
                          true);
  };
  const auto report = grad_check(model->parameters(), loss, grads, 1e-4);
  EXPECT_TRUE(report.pass) << to_string(family) << " max relative error " << report.max_relative_error;
}

INSTANTIATE_TEST_SUITE_P(AllFamilies, FamilyGradient,
                         ::testing::Values(Family::kTransD, Family::kRating, Family::kDot),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Models, RatingSimplexInvariantUnderLogitShift) {
  Rng rng(9);
  RatingModel<double> m(4, 5, 3, rng);
  Matrix<double> h(2, 3), t(2, 3);
  for (double& v : h.values()) v = rng.uniform(-1, 1);
  for (double& v : t.values()) v = rng.uniform(-1, 1);
  const auto p = m.distribution(h, t);
  for (size_t r = 0; r < 2; ++r) {
    double sum = 0;
    for (double v : p.row(r)) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Models, FamilyNamesRoundTrip) {
  for (Family f : {Family::kTransD, Family::kRating, Family::kDot}) EXPECT_EQ(parse_family(to_string(f)), f);
  EXPECT_ANY_THROW(parse_family("transe"));
}
