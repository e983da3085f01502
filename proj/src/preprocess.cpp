#include "fairgraph/preprocess.hpp"

#include <cmath>
#include <deque>
#include <numeric>

#include "fairgraph/error.hpp"
#include "fairgraph/rng.hpp"

namespace fairgraph {

KCoreResult k_core(const Graph& graph, size_t k) {
  if (k == 0) fail(ErrorCode::kConfig, "k-core needs k >= 1");
  const size_t n = graph.num_nodes();
  std::vector<std::vector<size_t>> incident(n);
  const auto edges = graph.edges();
  for (size_t i = 0; i < edges.size(); ++i) {
    incident[edges[i].head].push_back(i);
    incident[edges[i].tail].push_back(i);
  }
  std::vector<size_t> degree(n);
  for (size_t v = 0; v < n; ++v) degree[v] = incident[v].size();

  std::vector<bool> removed(n, false);
  std::vector<bool> edge_dead(edges.size(), false);
  std::deque<NodeId> queue;
  for (NodeId v = 0; v < n; ++v) {
    if (degree[v] < k) {
      removed[v] = true;
      queue.push_back(v);
    }
  }
  while (!queue.empty()) {
    const NodeId v = queue.front();
    queue.pop_front();
    for (size_t ei : incident[v]) {
      if (edge_dead[ei]) continue;
      edge_dead[ei] = true;
      for (NodeId u : {edges[ei].head, edges[ei].tail}) {
        if (removed[u]) continue;
        if (--degree[u] < k) {
          removed[u] = true;
          queue.push_back(u);
        }
      }
    }
  }

  KCoreResult result;
  result.old_to_new.assign(n, kNoNode);
  GraphBuilder builder;
  for (NodeType t = 0; t < graph.num_types(); ++t) builder.add_type(graph.type_name(t));
  const auto& values = graph.relation_values();
  for (RelationId r = 0; r < graph.num_relations(); ++r) {
    if (values.empty()) {
      builder.intern_relation(graph.relation_name(r));
    } else {
      builder.intern_relation(graph.relation_name(r), values[r]);
    }
  }
  for (NodeId v = 0; v < n; ++v) {
    if (removed[v]) continue;
    result.old_to_new[v] = builder.intern_node(graph.node_type(v), graph.node_name(v));
    result.new_to_old.push_back(v);
  }
  for (size_t i = 0; i < edges.size(); ++i) {
    if (edge_dead[i]) continue;
    const Triple& e = edges[i];
    builder.add_edge(Triple{result.old_to_new[e.head], e.relation, result.old_to_new[e.tail]});
  }
  result.graph = std::move(builder).build();
  return result;
}

std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(size_t count, double ratio,
                                                                  uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) fail(ErrorCode::kConfig, "split ratio must lie in (0, 1)");
  std::vector<size_t> order(count);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_train = static_cast<size_t>(std::llround(ratio * static_cast<double>(count)));
  std::vector<size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return {std::move(train), std::move(test)};
}

EdgeSplit split_edges(const Graph& graph, double ratio, uint64_t seed) {
  auto [train_idx, test_idx] = split_indices(graph.num_edges(), ratio, seed);
  EdgeSplit split;
  split.seed = seed;
  split.ratio = ratio;
  const auto edges = graph.edges();
  for (size_t i : train_idx) split.train.push_back(edges[i]);
  for (size_t i : test_idx) split.test.push_back(edges[i]);
  return split;
}

}  // namespace fairgraph
