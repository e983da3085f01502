#include "fairgraph/sampling.hpp"

#include <numeric>

#include "fairgraph/error.hpp"

namespace fairgraph {

CorruptionMode parse_corruption_mode(const std::string& name) {
  if (name == "head") return CorruptionMode::kHead;
  if (name == "tail") return CorruptionMode::kTail;
  if (name == "either") return CorruptionMode::kEither;
  fail(ErrorCode::kConfig, "unknown corruption mode '" + name + "'");
}

const char* to_string(CorruptionMode mode) {
  switch (mode) {
    case CorruptionMode::kHead: return "head";
    case CorruptionMode::kTail: return "tail";
    case CorruptionMode::kEither: return "either";
  }
  return "?";
}

NegativeSampler::NegativeSampler(const Graph& graph, std::span<const Triple> train_edges,
                                 NegativeSamplerConfig config)
    : graph_(&graph), config_(config) {
  if (config_.ratio == 0) fail(ErrorCode::kConfig, "negative ratio must be positive");
  if (config_.filtered) train_set_.insert(train_edges.begin(), train_edges.end());
  all_nodes_.resize(graph.num_nodes());
  std::iota(all_nodes_.begin(), all_nodes_.end(), NodeId{0});
  by_type_.resize(graph.num_types());
  for (NodeId v = 0; v < graph.num_nodes(); ++v) by_type_[graph.node_type(v)].push_back(v);
}

const std::vector<NodeId>& NegativeSampler::pool_for(NodeId node) const {
  return config_.type_constrained ? by_type_[graph_->node_type(node)] : all_nodes_;
}

bool NegativeSampler::draw(const Triple& positive, bool corrupt_head, bool filtered, Rng& rng,
                           Triple& out) const {
  const NodeId original = corrupt_head ? positive.head : positive.tail;
  const auto& pool = pool_for(original);
  if (pool.size() < 2) return false;
  const NodeId pick = pool[rng.index(pool.size())];
  if (pick == original) return false;
  out = positive;
  (corrupt_head ? out.head : out.tail) = pick;
  return !(filtered && train_set_.count(out) > 0);
}

NegativeBatch NegativeSampler::sample(std::span<const Triple> batch, Rng& rng) const {
  NegativeBatch result;
  result.negatives.reserve(batch.size() * config_.ratio);
  result.fell_back.assign(batch.size(), 0);
  for (size_t i = 0; i < batch.size(); ++i) {
    const Triple& positive = batch[i];
    for (size_t j = 0; j < config_.ratio; ++j) {
      Triple negative;
      bool found = false;
      for (int pass = 0; pass < 2 && !found; ++pass) {
        const bool filtered = config_.filtered && pass == 0;
        if (pass == 1) {
          if (!result.fell_back[i]) ++result.fallbacks;
          result.fell_back[i] = 1;
        }
        for (size_t attempt = 0; attempt < config_.retry_budget && !found; ++attempt) {
          bool head = config_.mode == CorruptionMode::kHead;
          if (config_.mode == CorruptionMode::kEither) head = rng.bernoulli(0.5);
          found = draw(positive, head, filtered, rng, negative);
        }
        if (!config_.filtered) break;
      }
      if (!found) {
        fail(ErrorCode::kUsage, "no corruption of triple (" + std::to_string(positive.head) + ", " +
                                    std::to_string(positive.relation) + ", " +
                                    std::to_string(positive.tail) +
                                    ") differs from the original within the retry budget");
      }
      result.negatives.push_back(negative);
    }
  }
  return result;
}

BatchIterator::BatchIterator(size_t count, size_t batch_size, uint64_t seed)
    : batch_size_(batch_size), order_(count), rng_(seed) {
  if (batch_size == 0) fail(ErrorCode::kConfig, "batch size must be at least 1");
  std::iota(order_.begin(), order_.end(), size_t{0});
}

void BatchIterator::next_epoch() {
  std::iota(order_.begin(), order_.end(), size_t{0});
  rng_.shuffle(order_);
}

size_t BatchIterator::num_batches() const { return (order_.size() + batch_size_ - 1) / batch_size_; }

std::span<const size_t> BatchIterator::batch(size_t i) const {
  const size_t begin = i * batch_size_;
  const size_t end = std::min(order_.size(), begin + batch_size_);
  return {order_.data() + begin, end - begin};
}

}  // namespace fairgraph
