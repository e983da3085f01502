#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fairgraph/evaluation.hpp"
#include "fairgraph/synthetic.hpp"
#include "test_util.hpp"

using namespace fairgraph;
using namespace fairgraph::testing_util;

namespace {

double pairwise_auc(const std::vector<double>& s, const std::vector<int32_t>& y) {
  double wins = 0;
  size_t pairs = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      ++pairs;
    }
  }
  return wins / pairs;
}

double bias_oracle(const Matrix<double>& p, const std::vector<int32_t>& groups, size_t num_groups) {
  double total = 0;
  for (size_t j = 0; j < p.cols(); ++j) {
    std::vector<double> sum(num_groups, 0);
    std::vector<size_t> count(num_groups, 0);
    for (size_t u = 0; u < p.rows(); ++u) {
      sum[groups[u]] += p(u, j);
      ++count[groups[u]];
    }
    double acc = 0;
    size_t pairs = 0;
    for (size_t a = 0; a < num_groups; ++a) {
      for (size_t b = a + 1; b < num_groups; ++b) {
        if (count[a] == 0 || count[b] == 0) continue;
        acc += std::abs(sum[a] / count[a] - sum[b] / count[b]);
        ++pairs;
      }
    }
    total += acc / pairs;
  }
  return total / p.cols();
}

TrainedModel plain(std::unique_ptr<EdgeModel<float>> model) {
  TrainedModel t;
  t.model = std::move(model);
  return t;
}

ProbeConfig quick_probe(uint64_t seed = 1) {
  ProbeConfig c;
  c.epochs = 60;
  c.batch_size = 64;
  c.learning_rate = 1e-2;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Auc, MatchesPairwiseOracleWithTies) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const size_t n = 5 + rng.index(60);
    std::vector<double> s(n);
    std::vector<int32_t> y(n);
    for (size_t i = 0; i < n; ++i) {
      s[i] = std::round(rng.uniform(0, 6));  // coarse scores force ties
      y[i] = rng.bernoulli(0.4) ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
    EXPECT_NEAR(auc(s, y), pairwise_auc(s, y), 1e-12);
  }
}

TEST(Auc, Examples) {
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.9, 0.1}, std::vector<int32_t>{1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.1, 0.9}, std::vector<int32_t>{1, 0}), 0.0);
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.5, 0.5, 0.5}, std::vector<int32_t>{1, 0, 1}), 0.5);
  EXPECT_EQ(code_of([] { auc(std::vector<double>{1, 2}, std::vector<int32_t>{1, 1}); }), ErrorCode::kDegenerate);
  EXPECT_EQ(code_of([] { auc(std::vector<double>{1}, std::vector<int32_t>{1, 0}); }), ErrorCode::kShape);
}

TEST(MicroF1, EqualsAccuracy) {
  EXPECT_DOUBLE_EQ(micro_f1(std::vector<int32_t>{0, 1, 2, 2}, std::vector<int32_t>{0, 1, 1, 2}), 0.75);
  EXPECT_DOUBLE_EQ(micro_f1(std::vector<int32_t>{3, 3}, std::vector<int32_t>{3, 3}), 1.0);
  EXPECT_EQ(code_of([] { micro_f1(std::vector<int32_t>{}, std::vector<int32_t>{}); }), ErrorCode::kDegenerate);
}

TEST(RankOf, CountsStrictlyHigher) {
  const std::vector<double> s = {0.3, 0.9, 0.3, 0.1};
  EXPECT_EQ(rank_of(s, 1), 1u);
  EXPECT_EQ(rank_of(s, 0), 2u);  // the tie does not push it down
  EXPECT_EQ(rank_of(s, 2), 2u);
  EXPECT_EQ(rank_of(s, 3), 4u);
}

TEST(RankOf, RandomThreeCandidatesAverageTwo) {
  Rng rng(2);
  double total = 0;
  const size_t n = 60000;
  for (size_t i = 0; i < n; ++i) {
    const std::vector<double> s = {rng.uniform(), rng.uniform(), rng.uniform()};
    total += static_cast<double>(rank_of(s, 0));
  }
  EXPECT_NEAR(total / n, 2.0, 0.02);
}

TEST(PredictionBias, Example) {
  // item 0: group means 0.8 and 0.4; item 1: both 0.5
  const auto p = Matrix<double>::from_rows({{0.8, 0.5}, {0.8, 0.5}, {0.4, 0.5}});
  const std::vector<int32_t> g = {0, 0, 1};
  EXPECT_NEAR(prediction_bias(p, g, 2), 0.2, 1e-15);
  const auto single = Matrix<double>::from_rows({{0.8}, {0.4}});
  EXPECT_NEAR(prediction_bias(single, std::vector<int32_t>{0, 1}, 2), 0.4, 1e-15);
}

TEST(PredictionBias, MatchesOracleAndSerialPath) {
  Rng rng(3);
  Matrix<double> p(30, 7);
  for (double& v : p.values()) v = rng.uniform(1, 5);
  std::vector<int32_t> g(30);
  for (auto& v : g) v = static_cast<int32_t>(rng.index(3));
  g[0] = 0;
  g[1] = 1;
  g[2] = 2;
  const double expected = bias_oracle(p, g, 4);  // group 3 stays empty
  EXPECT_NEAR(prediction_bias(p, g, 4), expected, 1e-12);
  EXPECT_DOUBLE_EQ(prediction_bias(p, g, 4, Execution::kSerial), prediction_bias(p, g, 4));
}

TEST(PredictionBias, ConstantPredictionsAndPermutations) {
  Matrix<double> c(6, 3);
  c.fill(3.5);
  EXPECT_DOUBLE_EQ(prediction_bias(c, std::vector<int32_t>{0, 1, 0, 1, 2, 2}, 3), 0.0);

  Rng rng(4);
  Matrix<double> p(8, 4);
  for (double& v : p.values()) v = rng.uniform();
  const std::vector<int32_t> g = {0, 1, 1, 0, 1, 0, 0, 1};
  std::vector<size_t> order(8);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  Matrix<double> q(8, 4);
  std::vector<int32_t> h(8);
  for (size_t i = 0; i < 8; ++i) {
    std::copy(p.row(order[i]).begin(), p.row(order[i]).end(), q.row(i).begin());
    h[i] = g[order[i]];
  }
  EXPECT_NEAR(prediction_bias(p, g, 2), prediction_bias(q, h, 2), 1e-15);
  EXPECT_EQ(code_of([&] { prediction_bias(p, std::vector<int32_t>(8, 1), 2); }), ErrorCode::kDegenerate);
}

TEST(MeanRank, MatchesBruteForce) {
  Rng rng(5);
  const size_t nodes = 30;
  auto trained = plain(make_model<float>(Family::kTransD, nodes, 3, 5, rng));
  auto& model = static_cast<TransDModel<float>&>(*trained.model);
  std::vector<Triple> test;
  for (int i = 0; i < 12; ++i) {
    test.push_back({static_cast<NodeId>(rng.index(nodes)), static_cast<RelationId>(rng.index(3)),
                    static_cast<NodeId>(rng.index(nodes))});
  }
  for (CorruptionMode sides : {CorruptionMode::kHead, CorruptionMode::kTail, CorruptionMode::kEither}) {
    double total = 0;
    size_t count = 0;
    for (const Triple& t : test) {
      for (bool head_side : {true, false}) {
        if (head_side && sides == CorruptionMode::kTail) continue;
        if (!head_side && sides == CorruptionMode::kHead) continue;
        const float truth = transd_score(model, t);
        size_t rank = 1;
        for (NodeId c = 0; c < nodes; ++c) {
          Triple x = t;
          (head_side ? x.head : x.tail) = c;
          rank += transd_score(model, x) > truth;
        }
        total += static_cast<double>(rank);
        ++count;
      }
    }
    EXPECT_NEAR(mean_rank(trained, nullptr, test, sides, 0), total / count, 1e-9) << to_string(sides);
    EXPECT_DOUBLE_EQ(mean_rank(trained, nullptr, test, sides, 0, {}, Execution::kSerial),
                     mean_rank(trained, nullptr, test, sides, 0));
  }
}

TEST(MeanRank, CandidateRestriction) {
  Rng rng(6);
  auto trained = plain(make_model<float>(Family::kTransD, 10, 1, 4, rng));
  const std::vector<Triple> test = {{0, 0, 5}};
  const std::vector<NodeId> only_truth = {5};
  EXPECT_DOUBLE_EQ(mean_rank(trained, nullptr, test, CorruptionMode::kTail, 0, only_truth), 1.0);
  const std::vector<NodeId> missing = {1, 2};
  EXPECT_EQ(code_of([&] { mean_rank(trained, nullptr, test, CorruptionMode::kTail, 0, missing); }),
            ErrorCode::kIndex);
}

TEST(EdgeAuc, MatchesConcordanceOverSameNegatives) {
  SyntheticConfig sc;
  sc.users = 60;
  sc.items = 20;
  sc.edges_per_user = 5;
  const auto g = make_synthetic(sc);
  Rng init(7);
  auto trained = plain(make_model<float>(Family::kDot, g.graph.num_nodes(), g.graph.num_relations(), 6, init));
  const auto test = std::vector<Triple>(g.graph.edges().begin(), g.graph.edges().begin() + 40);
  NegativeSampler sampler(g.graph, g.graph.edges(), NegativeSamplerConfig{});
  Rng a(11), b(11);
  const auto negatives = sampler.sample(test, a).negatives;
  const auto& emb = trained.model->embeddings().value;
  auto score = [&](const Triple& t) {
    double s = 0;
    for (size_t j = 0; j < emb.cols(); ++j) s += double(emb(t.head, j)) * double(emb(t.tail, j));
    return s;
  };
  std::vector<double> s;
  std::vector<int32_t> y;
  for (const auto& t : test) {
    s.push_back(score(t));
    y.push_back(1);
  }
  for (const auto& t : negatives) {
    s.push_back(score(t));
    y.push_back(0);
  }
  EXPECT_NEAR(edge_auc(trained, nullptr, test, sampler, b, 0), pairwise_auc(s, y), 1e-6);
}

TEST(Rmse, UniformModelExample) {
  Rng rng(8);
  auto trained = plain(make_model<float>(Family::kRating, 4, 5, 3, rng));
  for (auto* p : trained.model->parameters()) p->value.fill(0.0f);
  // Every prediction is the uniform mean 3; ratings 1 and 5 miss by 2.
  const std::vector<Triple> test = {{0, 0, 2}, {1, 4, 3}};
  EXPECT_NEAR(rmse(trained, nullptr, test, {1, 2, 3, 4, 5}, 0), 2.0, 1e-6);
  EXPECT_EQ(code_of([&] { rmse(trained, nullptr, test, {1, 2}, 0); }), ErrorCode::kShape);
  auto dot = plain(make_model<float>(Family::kDot, 4, 1, 3, rng));
  EXPECT_EQ(code_of([&] { rmse(dot, nullptr, test, {1}, 0); }), ErrorCode::kUsage);
}

TEST(Probe, RecoversAttributeEncodedInEmbedding) {
  Rng rng(9);
  const size_t n = 300;
  Matrix<float> emb(n, 4);
  std::vector<int32_t> labels(n);
  for (size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int32_t>(rng.index(2));
    emb(i, labels[i]) = 1.0f;  // one-hot
    emb(i, 2) = static_cast<float>(rng.uniform(-1, 1));
  }
  const auto r = probe_leakage(emb, labels, 2, quick_probe());
  EXPECT_EQ(r.metric, "auc");
  EXPECT_GT(r.score, 0.98);
  EXPECT_EQ(r.train_count + r.test_count, n);
  EXPECT_EQ(r.test_count, 30u);
}

TEST(Probe, ConstantEmbeddingsAreAtChance) {
  const size_t n = 200;
  Matrix<float> emb(n, 4);
  emb.fill(0.3f);
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    std::vector<int32_t> labels(n);
    for (auto& v : labels) v = static_cast<int32_t>(rng.index(2));
    EXPECT_NEAR(probe_leakage(emb, labels, 2, quick_probe(seed)).score, 0.5, 0.05) << seed;
  }
}

TEST(Probe, MulticlassUsesMicroF1) {
  Rng rng(10);
  const size_t n = 300;
  Matrix<float> emb(n, 5);
  std::vector<int32_t> labels(n);
  for (size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<int32_t>(rng.index(4));
    emb(i, labels[i]) = 1.0f;
  }
  const auto r = probe_leakage(emb, labels, 4, quick_probe());
  EXPECT_EQ(r.metric, "micro_f1");
  EXPECT_GT(r.score, 0.95);
  EXPECT_EQ(code_of([&] { probe_leakage(emb, labels, 1, quick_probe()); }), ErrorCode::kConfig);
}

TEST(Baselines, MajorityAndRandom) {
  EXPECT_DOUBLE_EQ(random_baseline(2), 0.5);
  EXPECT_DOUBLE_EQ(random_baseline(4), 0.25);
  EXPECT_EQ(code_of([] { random_baseline(1); }), ErrorCode::kConfig);

  Rng rng(11);
  std::vector<int32_t> binary(200);
  for (auto& v : binary) v = rng.bernoulli(0.7) ? 1 : 0;
  EXPECT_DOUBLE_EQ(majority_baseline(binary, 2, quick_probe()).score, 0.5);

  // 70% class 2: the majority guess scores the class-2 share of the test side.
  std::vector<int32_t> skewed(200, 2);
  for (size_t i = 0; i < 60; ++i) skewed[i] = static_cast<int32_t>(i % 2);
  rng.shuffle(skewed);
  const auto m = majority_baseline(skewed, 3, quick_probe());
  EXPECT_EQ(m.metric, "micro_f1");
  EXPECT_EQ(m.test_count, 20u);
  EXPECT_NEAR(m.score, 0.7, 0.25);
  EXPECT_DOUBLE_EQ(m.score * 20, std::round(m.score * 20));
}
