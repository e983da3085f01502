#pragma once

#include <cstdint>

#include "fairgraph/attributes.hpp"
#include "fairgraph/graph.hpp"

namespace fairgraph {

// Attributed user-item graph. Each user carries K independent fair-coin
// binary attributes; user u links to item i with weight
//   exp(latent_scale * <x_u, y_i> / sqrt(L) + signal * sum_k (2 a_uk - 1) w_ik)
// where x, y, w are standard normal. Every user gets exactly edges_per_user
// distinct items, drawn without replacement by the Gumbel top-k trick.
struct SyntheticConfig {
  size_t users = 2000;
  size_t items = 200;
  size_t attributes = 3;
  size_t edges_per_user = 20;
  size_t latent_dim = 8;
  double latent_scale = 2.0;
  double signal = 0.6;
  uint64_t seed = 7;
};

struct SyntheticGraph {
  Graph graph;
  AttributeTable attributes;
};

SyntheticGraph make_synthetic(const SyntheticConfig& config);

}  // namespace fairgraph
