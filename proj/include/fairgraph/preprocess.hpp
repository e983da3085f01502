#pragma once

#include <cstdint>
#include <vector>

#include "fairgraph/graph.hpp"

namespace fairgraph {

struct KCoreResult {
  Graph graph;
  std::vector<NodeId> old_to_new;  // kNoNode for peeled nodes
  std::vector<NodeId> new_to_old;
};

// Maximal subgraph in which every node has undirected degree >= k. Surviving
// nodes keep their relative order; relations are kept as-is.
KCoreResult k_core(const Graph& graph, size_t k);

struct EdgeSplit {
  std::vector<Triple> train;
  std::vector<Triple> test;
  uint64_t seed = 0;
  double ratio = 0.0;
};

// Uniform random split; round(ratio * |E|) edges go to train.
EdgeSplit split_edges(const Graph& graph, double ratio, uint64_t seed);

// Splits `count` items into (train, test) index lists the same way.
std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(size_t count, double ratio,
                                                                  uint64_t seed);

}  // namespace fairgraph
