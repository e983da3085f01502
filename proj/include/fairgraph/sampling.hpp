#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fairgraph/graph.hpp"
#include "fairgraph/rng.hpp"

namespace fairgraph {

enum class CorruptionMode { kHead, kTail, kEither };

CorruptionMode parse_corruption_mode(const std::string& name);
const char* to_string(CorruptionMode mode);

struct NegativeSamplerConfig {
  size_t ratio = 1;  // negatives per positive
  CorruptionMode mode = CorruptionMode::kEither;
  bool filtered = false;
  bool type_constrained = false;
  size_t retry_budget = 100;
};

struct NegativeBatch {
  // ratio negatives per positive, grouped by positive.
  std::vector<Triple> negatives;
  // Set for positives whose filtered draws ran out of retries.
  std::vector<uint8_t> fell_back;
  size_t fallbacks = 0;
};

// Corrupts one slot (head or tail) of each positive. The replacement always
// differs from the original node; with `filtered` it is also absent from the
// training edges, subject to the retry budget.
class NegativeSampler {
 public:
  NegativeSampler(const Graph& graph, std::span<const Triple> train_edges,
                  NegativeSamplerConfig config);

  const NegativeSamplerConfig& config() const { return config_; }
  NegativeBatch sample(std::span<const Triple> batch, Rng& rng) const;

 private:
  // Candidate pool for a node: all nodes, or its type's nodes.
  const std::vector<NodeId>& pool_for(NodeId node) const;
  bool draw(const Triple& positive, bool corrupt_head, bool filtered, Rng& rng, Triple& out) const;

  const Graph* graph_;
  NegativeSamplerConfig config_;
  TripleSet train_set_;
  std::vector<NodeId> all_nodes_;
  std::vector<std::vector<NodeId>> by_type_;
};

// Seeded epoch-wise shuffling over `count` items; the last batch may be short.
class BatchIterator {
 public:
  BatchIterator(size_t count, size_t batch_size, uint64_t seed);

  // Reshuffles; call once at the start of every epoch.
  void next_epoch();
  size_t num_batches() const;
  std::span<const size_t> batch(size_t i) const;
  const std::vector<size_t>& order() const { return order_; }

 private:
  size_t batch_size_;
  std::vector<size_t> order_;
  Rng rng_;
};

}  // namespace fairgraph
