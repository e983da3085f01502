#include "fairgraph/graph.hpp"

#include <zlib.h>

#include <cstring>

#include "fairgraph/error.hpp"

namespace fairgraph {

namespace {

uint64_t fnv1a(uint64_t h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= 0xff;  // field separator
  h *= 0x100000001b3ULL;
  return h;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

bool is_blank_or_comment(const std::string& line) {
  const auto first = line.find_first_not_of(" \t");
  return first == std::string::npos || line[first] == '#';
}

[[noreturn]] void parse_failure(const std::filesystem::path& path, size_t line,
                                const std::string& why) {
  fail(ErrorCode::kParse, path.string() + ":" + std::to_string(line) + ": " + why);
}

}  // namespace

std::vector<std::string> split(const std::string& text, const std::string& delimiter) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    const size_t pos = text.find(delimiter, start);
    if (pos == std::string::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + delimiter.size();
  }
}

// ---------------------------------------------------------------------------
// Graph

std::optional<NodeType> Graph::find_type(const std::string& name) const {
  for (NodeType t = 0; t < type_names_.size(); ++t) {
    if (type_names_[t] == name) return t;
  }
  return std::nullopt;
}

std::optional<NodeId> Graph::find_node(NodeType type, const std::string& name) const {
  if (type >= index_.size()) return std::nullopt;
  const auto it = index_[type].find(name);
  if (it == index_[type].end()) return std::nullopt;
  return it->second;
}

std::optional<RelationId> Graph::find_relation(const std::string& name) const {
  const auto it = relation_index_.find(name);
  if (it == relation_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<NodeId> Graph::nodes_of_type(NodeType type) const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < node_types_.size(); ++v) {
    if (node_types_[v] == type) out.push_back(v);
  }
  return out;
}

size_t Graph::count_of_type(NodeType type) const {
  size_t n = 0;
  for (NodeType t : node_types_) n += t == type;
  return n;
}

std::vector<size_t> Graph::degrees() const {
  std::vector<size_t> degree(num_nodes(), 0);
  for (const Triple& e : edges_) {
    ++degree[e.head];
    ++degree[e.tail];
  }
  return degree;
}

uint64_t Graph::vocabulary_hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : type_names_) h = fnv1a(h, t);
  for (NodeId v = 0; v < node_names_.size(); ++v) {
    h = fnv1a(h, std::to_string(node_types_[v]));
    h = fnv1a(h, node_names_[v]);
  }
  for (const auto& r : relation_names_) h = fnv1a(h, r);
  return h;
}

bool Graph::contains(const Triple& t) const { return edge_set_.count(t) > 0; }

// ---------------------------------------------------------------------------
// GraphBuilder

NodeType GraphBuilder::add_type(const std::string& name) {
  if (auto t = graph_.find_type(name)) return *t;
  graph_.type_names_.push_back(name);
  graph_.index_.emplace_back();
  return static_cast<NodeType>(graph_.type_names_.size() - 1);
}

NodeId GraphBuilder::intern_node(NodeType type, const std::string& name) {
  if (type >= graph_.type_names_.size()) fail(ErrorCode::kIndex, "unknown node type");
  auto& index = graph_.index_[type];
  const auto it = index.find(name);
  if (it != index.end()) return it->second;
  const auto id = static_cast<NodeId>(graph_.node_types_.size());
  graph_.node_types_.push_back(type);
  graph_.node_names_.push_back(name);
  index.emplace(name, id);
  return id;
}

RelationId GraphBuilder::intern_relation(const std::string& name) {
  if (auto r = graph_.find_relation(name)) return *r;
  if (!graph_.relation_values_.empty()) {
    fail(ErrorCode::kSchema, "relation '" + name + "' has no numeric value in a rating graph");
  }
  const auto id = static_cast<RelationId>(graph_.relation_names_.size());
  graph_.relation_names_.push_back(name);
  graph_.relation_index_.emplace(name, id);
  return id;
}

RelationId GraphBuilder::intern_relation(const std::string& name, double value) {
  if (auto r = graph_.find_relation(name)) return *r;
  if (graph_.relation_values_.size() != graph_.relation_names_.size()) {
    fail(ErrorCode::kSchema, "cannot mix valued and unvalued relations");
  }
  const auto id = static_cast<RelationId>(graph_.relation_names_.size());
  graph_.relation_names_.push_back(name);
  graph_.relation_values_.push_back(value);
  graph_.relation_index_.emplace(name, id);
  return id;
}

bool GraphBuilder::add_edge(const Triple& t) {
  if (t.head >= graph_.num_nodes() || t.tail >= graph_.num_nodes() ||
      t.relation >= graph_.num_relations()) {
    fail(ErrorCode::kIndex, "triple references an unknown node or relation");
  }
  if (!graph_.edge_set_.insert(t).second) {
    ++duplicates_;
    return false;
  }
  graph_.edges_.push_back(t);
  return true;
}

bool GraphBuilder::add_edge(NodeType head_type, const std::string& head,
                            const std::string& relation, NodeType tail_type,
                            const std::string& tail) {
  const NodeId h = intern_node(head_type, head);
  const RelationId r = intern_relation(relation);
  const NodeId t = intern_node(tail_type, tail);
  return add_edge(Triple{h, r, t});
}

Graph GraphBuilder::build() && { return std::move(graph_); }

// ---------------------------------------------------------------------------
// Loading

TripleFormat parse_triple_format(const std::string& name) {
  if (name == "tsv-triple") return TripleFormat::kTsvTriple;
  if (name == "movielens-rating") return TripleFormat::kMovielensRating;
  if (name == "bipartite-edge") return TripleFormat::kBipartiteEdge;
  fail(ErrorCode::kConfig, "unknown edge format '" + name + "'");
}

const char* to_string(TripleFormat format) {
  switch (format) {
    case TripleFormat::kTsvTriple: return "tsv-triple";
    case TripleFormat::kMovielensRating: return "movielens-rating";
    case TripleFormat::kBipartiteEdge: return "bipartite-edge";
  }
  return "?";
}

LineReader::LineReader(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::kIo, "no such file: " + path.string());
  // gzread passes uncompressed input through unchanged.
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) fail(ErrorCode::kIo, "cannot open " + path.string());
  handle_ = file;
}

LineReader::~LineReader() {
  if (handle_) gzclose(static_cast<gzFile>(handle_));
}

bool LineReader::next(std::string& line) {
  line.clear();
  char buffer[4096];
  auto* file = static_cast<gzFile>(handle_);
  bool got_any = false;
  while (gzgets(file, buffer, sizeof(buffer)) != nullptr) {
    got_any = true;
    const size_t len = std::strlen(buffer);
    if (len > 0 && buffer[len - 1] == '\n') {
      line.append(buffer, len - 1);
      ++line_number_;
      line = strip_cr(std::move(line));
      return true;
    }
    line.append(buffer, len);
  }
  int err = 0;
  gzerror(file, &err);
  if (err != Z_OK && err != Z_STREAM_END) fail(ErrorCode::kIo, "read error (corrupt gzip?)");
  if (got_any) {
    ++line_number_;
    line = strip_cr(std::move(line));
  }
  return got_any;
}

void prepare_builder(GraphBuilder& builder, TripleFormat format, const LoadOptions& options) {
  switch (format) {
    case TripleFormat::kTsvTriple:
      builder.add_type("entity");
      break;
    case TripleFormat::kMovielensRating:
      builder.add_type("user");
      builder.add_type("item");
      for (const auto& value : options.rating_values) {
        double numeric = 0.0;
        try {
          numeric = std::stod(value);
        } catch (const std::exception&) {
          fail(ErrorCode::kConfig, "rating label '" + value + "' is not numeric");
        }
        builder.intern_relation(value, numeric);
      }
      break;
    case TripleFormat::kBipartiteEdge:
      builder.add_type("user");
      builder.add_type("item");
      builder.intern_relation("interacts");
      break;
  }
}

std::vector<Triple> append_triples(GraphBuilder& builder, const std::filesystem::path& path,
                                   TripleFormat format, const LoadOptions& /*options*/) {
  LineReader reader(path);
  std::vector<Triple> read;
  std::string line;
  const Graph& g = builder.peek();
  while (reader.next(line)) {
    if (is_blank_or_comment(line)) continue;
    const size_t ln = reader.line_number();
    Triple t;
    switch (format) {
      case TripleFormat::kTsvTriple: {
        const auto parts = split(line, "\t");
        if (parts.size() != 3 || parts[0].empty() || parts[1].empty() || parts[2].empty()) {
          parse_failure(path, ln, "expected head<TAB>relation<TAB>tail");
        }
        const NodeType entity = *g.find_type("entity");
        t.head = builder.intern_node(entity, parts[0]);
        t.relation = builder.intern_relation(parts[1]);
        t.tail = builder.intern_node(entity, parts[2]);
        break;
      }
      case TripleFormat::kMovielensRating: {
        const auto parts = split(line, "::");
        if (parts.size() != 4 || parts[0].empty() || parts[1].empty()) {
          parse_failure(path, ln, "expected user::item::rating::timestamp");
        }
        const auto rel = g.find_relation(parts[2]);
        if (!rel) {
          fail(ErrorCode::kSchema, path.string() + ":" + std::to_string(ln) +
                                       ": unknown rating value '" + parts[2] + "'");
        }
        t.head = builder.intern_node(*g.find_type("user"), parts[0]);
        t.relation = *rel;
        t.tail = builder.intern_node(*g.find_type("item"), parts[1]);
        break;
      }
      case TripleFormat::kBipartiteEdge: {
        const auto parts = split(line, "\t");
        if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
          parse_failure(path, ln, "expected user<TAB>item");
        }
        t.head = builder.intern_node(*g.find_type("user"), parts[0]);
        t.relation = 0;
        t.tail = builder.intern_node(*g.find_type("item"), parts[1]);
        break;
      }
    }
    if (builder.add_edge(t)) read.push_back(t);
  }
  return read;
}

Graph load_triples(const std::filesystem::path& path, TripleFormat format,
                   const LoadOptions& options) {
  GraphBuilder builder;
  prepare_builder(builder, format, options);
  append_triples(builder, path, format, options);
  return std::move(builder).build();
}

}  // namespace fairgraph
