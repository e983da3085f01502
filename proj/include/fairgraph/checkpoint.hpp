#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairgraph/attributes.hpp"
#include "fairgraph/graph.hpp"
#include "fairgraph/trainer.hpp"

namespace fairgraph {

inline constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointInfo {
  Family family = Family::kDot;
  size_t dim = 0;
  size_t num_nodes = 0;
  size_t num_relations = 0;
  uint64_t vocabulary_hash = 0;
  double lambda = 0.0;
  double mask_p = 0.5;
  std::vector<size_t> cardinalities;  // empty for plain encoders
  std::vector<Mask> heldout;
  nlohmann::json vocabulary;  // types, nodes (type, name), relations
  nlohmann::json run;         // free-form run metadata (resolved config, seed)
};

// Every persisted tensor of the model, filters and discriminators.
TensorRefs<float> all_tensors(TrainedModel& trained);

// Binary archive: magic, version, JSON header (metadata, vocabulary, tensor
// shapes), float32 tensors, trailing FNV-1a checksum.
void save_checkpoint(const std::filesystem::path& path, TrainedModel& trained, const Graph& graph,
                     const AttributeTable* attributes, const nlohmann::json& run = {});

struct LoadedCheckpoint {
  TrainedModel trained;
  CheckpointInfo info;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// Throws a compatibility error when the graph's vocabulary differs.
void require_compatible(const CheckpointInfo& info, const Graph& graph);

}  // namespace fairgraph
