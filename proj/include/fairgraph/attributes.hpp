#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fairgraph/graph.hpp"
#include "fairgraph/rng.hpp"

namespace fairgraph {

// K categorical sensitive attributes, defined exactly on the nodes of one
// node type. Values are class indices in [0, cardinality(k)).
class AttributeTable {
 public:
  AttributeTable() = default;
  AttributeTable(size_t num_nodes, NodeType sensitive_type, std::vector<std::string> names,
                 std::vector<std::vector<std::string>> categories);

  NodeType sensitive_type() const { return sensitive_type_; }
  size_t num_attributes() const { return names_.size(); }
  size_t cardinality(size_t k) const { return categories_.at(k).size(); }
  std::vector<size_t> cardinalities() const;
  const std::string& name(size_t k) const { return names_.at(k); }
  const std::vector<std::string>& categories(size_t k) const { return categories_.at(k); }
  bool is_binary(size_t k) const { return cardinality(k) == 2; }

  bool has(NodeId node) const { return node < row_of_.size() && row_of_[node] >= 0; }
  int32_t value(NodeId node, size_t k) const;
  std::span<const int32_t> values(NodeId node) const;

  // Attributed nodes in ascending id order.
  const std::vector<NodeId>& nodes() const { return nodes_; }
  size_t num_nodes() const { return nodes_.size(); }

  // Labels of attribute k for the given nodes.
  std::vector<int32_t> labels(std::span<const NodeId> nodes, size_t k) const;

  void set(NodeId node, std::span<const int32_t> values);

 private:
  NodeType sensitive_type_ = 0;
  std::vector<std::string> names_;
  std::vector<std::vector<std::string>> categories_;
  std::vector<int64_t> row_of_;
  std::vector<NodeId> nodes_;
  std::vector<int32_t> values_;
};

// `node<TAB>attr_name<TAB>value` lines. Attribute order is order of first
// appearance; category indices follow sorted value order (numeric when every
// value parses as an integer).
AttributeTable load_attributes(const std::filesystem::path& path, const Graph& graph,
                               NodeType sensitive_type);

// MovieLens users.dat: `UserID::Gender::Age::Occupation::Zip`, yielding
// gender, age and occupation attributes. Users absent from the graph are
// skipped.
AttributeTable load_movielens_users(const std::filesystem::path& path, const Graph& graph,
                                    NodeType sensitive_type);

void write_attributes(const std::filesystem::path& path, const Graph& graph,
                      const AttributeTable& table);

// Binary attribute k of node u is 1 iff u shares an edge with sensitive[k].
AttributeTable derive_edge_attributes(const Graph& graph, std::span<const NodeId> sensitive,
                                      NodeType sensitive_type);

// Draws `count` nodes of `type` uniformly from degree ranks
// [exclude_top, top) (0-based, ties broken by id).
std::vector<NodeId> select_sensitive_nodes(const Graph& graph, NodeType type, size_t count,
                                           size_t top, size_t exclude_top, Rng& rng);

}  // namespace fairgraph
