#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>

#include "fairgraph/attributes.hpp"
#include "fairgraph/graph.hpp"
#include "fairgraph/preprocess.hpp"
#include "fairgraph/sampling.hpp"
#include "test_util.hpp"

using namespace fairgraph;
using namespace fairgraph::testing_util;
namespace fs = std::filesystem;

namespace {

Graph bipartite(const std::vector<std::pair<std::string, std::string>>& edges) {
  GraphBuilder b;
  prepare_builder(b, TripleFormat::kBipartiteEdge);
  const NodeType user = 0, item = 1;
  for (const auto& [u, i] : edges) b.add_edge(user, u, "interacts", item, i);
  return std::move(b).build();
}

Graph random_bipartite(size_t users, size_t items, size_t edges, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<std::string, std::string>> list;
  for (size_t e = 0; e < edges; ++e) {
    list.emplace_back("u" + std::to_string(rng.index(users)), "i" + std::to_string(rng.index(items)));
  }
  return bipartite(list);
}

// Repeatedly drops every node below degree k until nothing changes.
std::set<std::pair<std::string, std::string>> naive_core_edges(const Graph& g, size_t k) {
  std::vector<bool> alive(g.num_nodes(), true);
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<size_t> degree(g.num_nodes(), 0);
    for (const auto& t : g.edges()) {
      if (alive[t.head] && alive[t.tail]) {
        ++degree[t.head];
        ++degree[t.tail];
      }
    }
    for (NodeId n = 0; n < g.num_nodes(); ++n) {
      if (alive[n] && degree[n] < k) {
        alive[n] = false;
        changed = true;
      }
    }
  }
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& t : g.edges()) {
    if (alive[t.head] && alive[t.tail]) out.emplace(g.node_name(t.head), g.node_name(t.tail));
  }
  return out;
}

}  // namespace

TEST(LoadTriples, TsvCountsEdgesAndRelations) {
  TempDir dir;
  const auto path = dir.write("kg.tsv", "a\tr1\tb\nb\tr2\tc\na\tr1\tc\n");
  const Graph g = load_triples(path, TripleFormat::kTsvTriple);
  EXPECT_EQ(g.num_edges(), 3U);
  EXPECT_EQ(g.num_relations(), 2U);
  EXPECT_EQ(g.num_nodes(), 3U);
}

TEST(LoadTriples, MovielensRatingsBecomeRelations) {
  TempDir dir;
  const auto path = dir.write("ratings.dat", "1::10::5::0\n1::11::3::0\n2::10::1::0\n");
  const Graph g = load_triples(path, TripleFormat::kMovielensRating);
  EXPECT_EQ(g.num_relations(), 5U);
  EXPECT_EQ(g.relation_values(), (std::vector<double>{1, 2, 3, 4, 5}));
  EXPECT_EQ(g.count_of_type(*g.find_type("user")), 2U);
  EXPECT_EQ(g.count_of_type(*g.find_type("item")), 2U);
}

TEST(LoadTriples, BipartiteHasOneRelationAndInfersNodes) {
  TempDir dir;
  const auto path = dir.write("edges.tsv", "alice\tbooks\nbob\tgames\nalice\tgames\n");
  const Graph g = load_triples(path, TripleFormat::kBipartiteEdge);
  EXPECT_EQ(g.num_relations(), 1U);
  EXPECT_TRUE(g.find_node(*g.find_type("user"), "bob"));
  EXPECT_EQ(g.num_edges(), 3U);
}

TEST(LoadTriples, Errors) {
  TempDir dir;
  const auto bad = dir.write("bad.tsv", "a\tr\tb\na\tb\n");
  try {
    load_triples(bad, TripleFormat::kTsvTriple);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos);
  }
  const auto rating = dir.write("r.dat", "1::10::6::0\n");
  EXPECT_EQ(code_of([&] { load_triples(rating, TripleFormat::kMovielensRating); }), ErrorCode::kSchema);
  EXPECT_EQ(code_of([&] { load_triples(dir.path() / "missing.tsv", TripleFormat::kTsvTriple); }),
            ErrorCode::kIo);
}

TEST(LoadAttributes, BinaryAttributeOnAllUsers) {
  TempDir dir;
  const Graph g = bipartite({{"u1", "a"}, {"u2", "b"}});
  const auto path = dir.write("attrs.tsv", "u1\tgender\tF\nu2\tgender\tM\n");
  const auto t = load_attributes(path, g, *g.find_type("user"));
  EXPECT_EQ(t.num_attributes(), 1U);
  EXPECT_EQ(t.cardinality(0), 2U);
  EXPECT_EQ(t.value(*g.find_node(0, "u2"), 0), 1);
}

TEST(LoadAttributes, MissingNodeIsIncomplete) {
  TempDir dir;
  const Graph g = bipartite({{"u1", "a"}, {"u2", "b"}});
  const auto path = dir.write("attrs.tsv", "u1\tgender\tF\n");
  EXPECT_EQ(code_of([&] { load_attributes(path, g, 0); }), ErrorCode::kCompleteness);
  const auto wrong = dir.write("w.tsv", "a\tgender\tF\n");
  EXPECT_EQ(code_of([&] { load_attributes(wrong, g, 0); }), ErrorCode::kType);
}

TEST(LoadAttributes, MovielensUsersGiveThreeAttributes) {
  TempDir dir;
  std::string ratings, users;
  const int ages[] = {1, 18, 25, 35, 45, 50, 56};
  for (int u = 1; u <= 21; ++u) {
    ratings += std::to_string(u) + "::1::4::0\n";
    users += std::to_string(u) + "::" + (u % 2 ? "F" : "M") + "::" + std::to_string(ages[u % 7]) + "::" +
             std::to_string(u - 1) + "::00000\n";
  }
  const Graph g = load_triples(dir.write("ratings.dat", ratings), TripleFormat::kMovielensRating);
  const auto t = load_movielens_users(dir.write("users.dat", users), g, *g.find_type("user"));
  EXPECT_EQ(t.cardinalities(), (std::vector<size_t>{2, 7, 21}));
}

TEST(DeriveEdgeAttributes, MatchesDirectScan) {
  const Graph g = bipartite({{"u", "c1"}, {"u", "c3"}, {"v", "c2"}, {"w", "c4"}});
  const NodeType item = 1;
  std::vector<NodeId> sensitive = {*g.find_node(item, "c1"), *g.find_node(item, "c2"), *g.find_node(item, "c3")};
  const auto t = derive_edge_attributes(g, sensitive, 0);
  const auto u = *g.find_node(0, "u");
  EXPECT_EQ(std::vector<int32_t>(t.values(u).begin(), t.values(u).end()), (std::vector<int32_t>{1, 0, 1}));
  for (NodeId n : t.nodes()) {
    for (size_t k = 0; k < sensitive.size(); ++k) {
      bool linked = false;
      for (const auto& e : g.edges()) linked = linked || (e.head == n && e.tail == sensitive[k]);
      EXPECT_EQ(t.value(n, k), linked ? 1 : 0);
    }
  }
  EXPECT_ANY_THROW(derive_edge_attributes(g, {}, 0));
  std::vector<NodeId> unknown = {999};
  EXPECT_EQ(code_of([&] { derive_edge_attributes(g, unknown, 0); }), ErrorCode::kIndex);
}

TEST(SelectSensitiveNodes, DrawsFromDegreeBand) {
  const Graph g = random_bipartite(300, 40, 2000, 3);
  Rng rng(1);
  const auto picked = select_sensitive_nodes(g, 1, 10, 20, 5, rng);
  ASSERT_EQ(picked.size(), 10U);
  auto items = g.nodes_of_type(1);
  const auto deg = g.degrees();
  std::stable_sort(items.begin(), items.end(), [&](NodeId a, NodeId b) { return deg[a] > deg[b]; });
  const std::set<NodeId> band(items.begin() + 5, items.begin() + 20);
  for (NodeId n : picked) EXPECT_TRUE(band.count(n));
  EXPECT_EQ(std::set<NodeId>(picked.begin(), picked.end()).size(), 10U);
}

TEST(KCore, TriangleUnchanged) {
  GraphBuilder b;
  prepare_builder(b, TripleFormat::kTsvTriple);
  b.add_edge(0, "a", "r", 0, "b");
  b.add_edge(0, "b", "r", 0, "c");
  b.add_edge(0, "c", "r", 0, "a");
  const Graph g = std::move(b).build();
  const auto core = k_core(g, 2);
  EXPECT_EQ(core.graph.num_nodes(), 3U);
  EXPECT_EQ(core.graph.num_edges(), 3U);
}

TEST(KCore, StarPeelsCompletely) {
  const Graph g = bipartite({{"c", "l1"}, {"c", "l2"}, {"c", "l3"}, {"c", "l4"}, {"c", "l5"}});
  const auto core = k_core(g, 2);
  EXPECT_EQ(core.graph.num_nodes(), 0U);
  EXPECT_EQ(core.graph.num_edges(), 0U);
}

class KCoreOracle : public ::testing::TestWithParam<int> {};

TEST_P(KCoreOracle, MatchesNaivePeeling) {
  const int seed = GetParam();
  const Graph g = random_bipartite(400 + 50 * seed, 150, 1800 + 200 * seed, seed);
  for (size_t k : {1, 2, 3, 5, 8}) {
    const auto core = k_core(g, k);
    std::set<std::pair<std::string, std::string>> got;
    for (const auto& t : core.graph.edges()) {
      got.emplace(core.graph.node_name(t.head), core.graph.node_name(t.tail));
    }
    EXPECT_EQ(got, naive_core_edges(g, k)) << "k=" << k;
    for (size_t d : core.graph.degrees()) EXPECT_GE(d, k);
    for (NodeId n = 0; n < core.graph.num_nodes(); ++n) {
      const NodeId old = core.new_to_old[n];
      EXPECT_EQ(core.old_to_new[old], n);
      EXPECT_EQ(core.graph.node_name(n), g.node_name(old));
    }
  }
}

INSTANTIATE_TEST_SUITE_P(RandomGraphs, KCoreOracle, ::testing::Range(1, 6));

TEST(SplitEdges, PartitionsDeterministically) {
  const Graph g = random_bipartite(60, 30, 100, 9);
  const auto s = split_edges(g, 0.9, 4);
  EXPECT_EQ(s.train.size(), static_cast<size_t>(std::llround(0.9 * g.num_edges())));
  EXPECT_EQ(s.train.size() + s.test.size(), g.num_edges());
  std::set<Triple> all(s.train.begin(), s.train.end());
  for (const auto& t : s.test) EXPECT_TRUE(all.insert(t).second);
  EXPECT_EQ(all, std::set<Triple>(g.edges().begin(), g.edges().end()));
  const auto again = split_edges(g, 0.9, 4);
  EXPECT_EQ(s.train, again.train);
  EXPECT_EQ(s.test, again.test);
  EXPECT_EQ(code_of([&] { split_edges(g, 1.0, 1); }), ErrorCode::kConfig);
}

TEST(SplitEdges, HundredEdges) {
  std::vector<std::pair<std::string, std::string>> list;
  for (int i = 0; i < 100; ++i) list.emplace_back("u" + std::to_string(i), "i" + std::to_string(i % 7));
  const auto s = split_edges(bipartite(list), 0.9, 1);
  EXPECT_EQ(s.train.size(), 90U);
  EXPECT_EQ(s.test.size(), 10U);
}

TEST(BatchIterator, SizesAndDeterminism) {
  BatchIterator it(10, 4, 3);
  it.next_epoch();
  ASSERT_EQ(it.num_batches(), 3U);
  EXPECT_EQ(it.batch(0).size(), 4U);
  EXPECT_EQ(it.batch(1).size(), 4U);
  EXPECT_EQ(it.batch(2).size(), 2U);
  BatchIterator same(10, 4, 3);
  same.next_epoch();
  EXPECT_EQ(it.order(), same.order());

  BatchIterator a(1000, 10, 1), b(1000, 10, 2);
  a.next_epoch();
  b.next_epoch();
  EXPECT_NE(a.order(), b.order());
  std::vector<size_t> sorted = a.order();
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < sorted.size(); ++i) EXPECT_EQ(sorted[i], i);
  const auto first = a.order();
  a.next_epoch();
  EXPECT_NE(first, a.order());
}

TEST(NegativeSampler, OnlyCandidateIsReturned) {
  // Two nodes, one edge a->b: with filtering and type-free corruption the
  // only non-edge that keeps the relation is a self-loop or reverse edge.
  const Graph g = bipartite({{"u", "i"}, {"v", "j"}});
  NegativeSamplerConfig cfg;
  cfg.filtered = true;
  cfg.type_constrained = true;
  const std::vector<Triple> train(g.edges().begin(), g.edges().end());
  NegativeSampler sampler(g, train, cfg);
  Rng rng(1);
  const std::vector<Triple> batch = {train[0]};
  for (int i = 0; i < 20; ++i) {
    const auto nb = sampler.sample(batch, rng);
    ASSERT_EQ(nb.negatives.size(), 1U);
    const Triple n = nb.negatives[0];
    const bool head_swap = n.head == train[1].head && n.tail == train[0].tail;
    const bool tail_swap = n.head == train[0].head && n.tail == train[1].tail;
    EXPECT_TRUE(head_swap || tail_swap);
    EXPECT_FALSE(nb.fell_back[0]);
  }
}

TEST(NegativeSampler, FilteredTypedAndOneSlotChanged) {
  const Graph g = random_bipartite(80, 30, 600, 5);
  const std::vector<Triple> train(g.edges().begin(), g.edges().end());
  NegativeSamplerConfig cfg;
  cfg.ratio = 20;
  cfg.filtered = true;
  cfg.type_constrained = true;
  NegativeSampler sampler(g, train, cfg);
  TripleSet train_set(train.begin(), train.end());
  Rng rng(2);
  const std::span<const Triple> batch(train.data(), 50);
  const auto nb = sampler.sample(batch, rng);
  ASSERT_EQ(nb.negatives.size(), 50U * 20U);
  for (size_t i = 0; i < nb.negatives.size(); ++i) {
    const Triple& pos = batch[i / 20];
    const Triple& neg = nb.negatives[i];
    EXPECT_EQ(neg.relation, pos.relation);
    EXPECT_EQ((neg.head != pos.head) + (neg.tail != pos.tail), 1);
    EXPECT_EQ(g.node_type(neg.head), g.node_type(pos.head));
    EXPECT_EQ(g.node_type(neg.tail), g.node_type(pos.tail));
    if (!nb.fell_back[i / 20]) EXPECT_FALSE(train_set.count(neg));
  }
  Rng again(2);
  EXPECT_EQ(sampler.sample(batch, again).negatives, nb.negatives);
}

TEST(NegativeSampler, SaturatedSlotFallsBack) {
  // One user linked to every item: no filtered tail corruption exists.
  const Graph g = bipartite({{"u", "a"}, {"u", "b"}});
  const std::vector<Triple> train(g.edges().begin(), g.edges().end());
  NegativeSamplerConfig cfg;
  cfg.filtered = true;
  cfg.type_constrained = true;
  cfg.mode = CorruptionMode::kTail;
  NegativeSampler sampler(g, train, cfg);
  Rng rng(3);
  const std::vector<Triple> batch = {train[0]};
  const auto nb = sampler.sample(batch, rng);
  EXPECT_TRUE(nb.fell_back[0]);
  EXPECT_EQ(nb.negatives.size(), 1U);
}

TEST(Graph, VocabularyHashTracksNames) {
  const Graph a = bipartite({{"u", "i"}});
  const Graph b = bipartite({{"u", "i"}});
  const Graph c = bipartite({{"u", "j"}});
  EXPECT_EQ(a.vocabulary_hash(), b.vocabulary_hash());
  EXPECT_NE(a.vocabulary_hash(), c.vocabulary_hash());
}
