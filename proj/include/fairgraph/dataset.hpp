#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "fairgraph/attributes.hpp"
#include "fairgraph/config.hpp"
#include "fairgraph/graph.hpp"

namespace fairgraph {

// A prepared dataset: graph, edge split and (optionally) attributes.
struct Dataset {
  Graph graph;
  std::vector<Triple> train;
  std::vector<Triple> test;
  std::optional<AttributeTable> attributes;
  nlohmann::json meta;

  const AttributeTable* attribute_table() const { return attributes ? &*attributes : nullptr; }
};

// Reads raw inputs, applies the k-core, splits edges and derives or loads
// attributes.
Dataset build_dataset(const DatasetSection& config);

// Directory layout: dataset.json (metadata), vocab.json (types, relations,
// nodes), train.tsv / test.tsv (id triples), attributes.json. Output is a
// deterministic function of the dataset.
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace fairgraph
