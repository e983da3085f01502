#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace fairgraph {

using NodeId = uint32_t;
using RelationId = uint32_t;
using NodeType = uint32_t;

inline constexpr NodeId kNoNode = UINT32_MAX;

struct Triple {
  NodeId head = 0;
  RelationId relation = 0;
  NodeId tail = 0;

  auto operator<=>(const Triple&) const = default;
};

struct TripleHash {
  size_t operator()(const Triple& t) const noexcept {
    uint64_t h = (static_cast<uint64_t>(t.head) << 32) ^ t.tail;
    h ^= static_cast<uint64_t>(t.relation) * 0x9e3779b97f4a7c15ULL;
    h ^= h >> 29;
    h *= 0xbf58476d1ce4e5b9ULL;
    return static_cast<size_t>(h ^ (h >> 32));
  }
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

// Typed nodes plus directed relation triples. Node ids are dense and assigned
// in order of first appearance; names are unique within a node type.
class Graph {
 public:
  size_t num_nodes() const { return node_types_.size(); }
  size_t num_relations() const { return relation_names_.size(); }
  size_t num_edges() const { return edges_.size(); }
  size_t num_types() const { return type_names_.size(); }

  std::span<const Triple> edges() const { return edges_; }

  NodeType node_type(NodeId id) const { return node_types_.at(id); }
  const std::string& node_name(NodeId id) const { return node_names_.at(id); }
  const std::string& type_name(NodeType t) const { return type_names_.at(t); }
  const std::string& relation_name(RelationId r) const { return relation_names_.at(r); }

  std::optional<NodeType> find_type(const std::string& name) const;
  std::optional<NodeId> find_node(NodeType type, const std::string& name) const;
  std::optional<RelationId> find_relation(const std::string& name) const;

  std::vector<NodeId> nodes_of_type(NodeType type) const;
  size_t count_of_type(NodeType type) const;

  // Numeric value attached to each relation (rating graphs); empty otherwise.
  const std::vector<double>& relation_values() const { return relation_values_; }

  // Undirected degree (incident edge count) of every node.
  std::vector<size_t> degrees() const;

  // Stable 64-bit digest of types, node names and relation names.
  uint64_t vocabulary_hash() const;

  bool contains(const Triple& t) const;

 private:
  friend class GraphBuilder;

  std::vector<std::string> type_names_;
  std::vector<NodeType> node_types_;
  std::vector<std::string> node_names_;
  std::vector<std::string> relation_names_;
  std::vector<double> relation_values_;
  std::vector<Triple> edges_;
  std::vector<std::unordered_map<std::string, NodeId>> index_;
  std::unordered_map<std::string, RelationId> relation_index_;
  TripleSet edge_set_;
};

class GraphBuilder {
 public:
  NodeType add_type(const std::string& name);
  NodeId intern_node(NodeType type, const std::string& name);
  RelationId intern_relation(const std::string& name);
  RelationId intern_relation(const std::string& name, double value);

  // Returns false (and stores nothing) for a duplicate triple.
  bool add_edge(const Triple& t);
  bool add_edge(NodeType head_type, const std::string& head, const std::string& relation,
                NodeType tail_type, const std::string& tail);

  size_t duplicates() const { return duplicates_; }
  const Graph& peek() const { return graph_; }
  Graph build() &&;

 private:
  Graph graph_;
  size_t duplicates_ = 0;
};

enum class TripleFormat { kTsvTriple, kMovielensRating, kBipartiteEdge };

TripleFormat parse_triple_format(const std::string& name);
const char* to_string(TripleFormat format);

struct LoadOptions {
  // Admissible rating labels for movielens-rating input, ascending; each
  // becomes one relation in this order.
  std::vector<std::string> rating_values = {"1", "2", "3", "4", "5"};
};

// Reads one edge file (optionally gzip-compressed) into a fresh graph.
Graph load_triples(const std::filesystem::path& path, TripleFormat format,
                   const LoadOptions& options = {});

// Appends one edge file into an existing builder; returns the triples read
// from this file in file order (duplicates within the builder included once).
std::vector<Triple> append_triples(GraphBuilder& builder, const std::filesystem::path& path,
                                   TripleFormat format, const LoadOptions& options = {});

// Sets up the node types and relations a format implies, before any edges.
void prepare_builder(GraphBuilder& builder, TripleFormat format, const LoadOptions& options = {});

// Line reader over plain or gzip-compressed text.
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path);
  ~LineReader();
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  bool next(std::string& line);
  size_t line_number() const { return line_number_; }

 private:
  void* handle_ = nullptr;
  size_t line_number_ = 0;
};

std::vector<std::string> split(const std::string& text, const std::string& delimiter);

}  // namespace fairgraph
