#include "fairgraph/attributes.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>

#include "fairgraph/error.hpp"

namespace fairgraph {

namespace {

bool parses_as_integer(const std::string& s) {
  if (s.empty()) return false;
  size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  return true;
}

std::vector<std::string> ordered_categories(std::vector<std::string> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  const bool numeric = std::all_of(values.begin(), values.end(), parses_as_integer);
  if (numeric) {
    std::sort(values.begin(), values.end(), [](const std::string& a, const std::string& b) {
      return std::stoll(a) < std::stoll(b);
    });
  }
  return values;
}

struct RawRecord {
  NodeId node;
  size_t attribute;
  std::string value;
  size_t line;
};

AttributeTable assemble(const Graph& graph, NodeType sensitive_type,
                        const std::vector<std::string>& names,
                        const std::vector<RawRecord>& records, const std::string& source) {
  const size_t k_count = names.size();
  if (k_count == 0) fail(ErrorCode::kSchema, source + ": no attributes found");
  std::vector<std::vector<std::string>> seen(k_count);
  for (const auto& r : records) seen[r.attribute].push_back(r.value);
  std::vector<std::vector<std::string>> categories(k_count);
  for (size_t k = 0; k < k_count; ++k) categories[k] = ordered_categories(seen[k]);

  std::vector<std::map<std::string, int32_t>> index(k_count);
  for (size_t k = 0; k < k_count; ++k) {
    for (size_t c = 0; c < categories[k].size(); ++c) index[k][categories[k][c]] = static_cast<int32_t>(c);
  }

  AttributeTable table(graph.num_nodes(), sensitive_type, names, categories);
  std::vector<std::vector<int32_t>> values(graph.num_nodes());
  for (const auto& r : records) {
    auto& row = values[r.node];
    if (row.empty()) row.assign(k_count, -1);
    const int32_t idx = index[r.attribute].at(r.value);
    if (row[r.attribute] >= 0 && row[r.attribute] != idx) {
      fail(ErrorCode::kSchema, source + ":" + std::to_string(r.line) + ": conflicting value for '" +
                                   names[r.attribute] + "' of node '" + graph.node_name(r.node) +
                                   "'");
    }
    row[r.attribute] = idx;
  }
  for (NodeId v : graph.nodes_of_type(sensitive_type)) {
    const auto& row = values[v];
    for (size_t k = 0; k < k_count; ++k) {
      if (row.empty() || row[k] < 0) {
        fail(ErrorCode::kCompleteness, source + ": node '" + graph.node_name(v) +
                                           "' has no value for attribute '" + names[k] + "'");
      }
    }
    table.set(v, row);
  }
  return table;
}

}  // namespace

AttributeTable::AttributeTable(size_t num_nodes, NodeType sensitive_type,
                               std::vector<std::string> names,
                               std::vector<std::vector<std::string>> categories)
    : sensitive_type_(sensitive_type),
      names_(std::move(names)),
      categories_(std::move(categories)),
      row_of_(num_nodes, -1) {
  if (names_.empty()) fail(ErrorCode::kSchema, "attribute table needs at least one attribute");
  if (names_.size() != categories_.size()) fail(ErrorCode::kShape, "attribute names/categories");
}

std::vector<size_t> AttributeTable::cardinalities() const {
  std::vector<size_t> out;
  for (const auto& c : categories_) out.push_back(c.size());
  return out;
}

int32_t AttributeTable::value(NodeId node, size_t k) const {
  if (!has(node)) fail(ErrorCode::kIndex, "node " + std::to_string(node) + " has no attributes");
  if (k >= names_.size()) fail(ErrorCode::kIndex, "attribute index out of range");
  return values_[static_cast<size_t>(row_of_[node]) * names_.size() + k];
}

std::span<const int32_t> AttributeTable::values(NodeId node) const {
  if (!has(node)) fail(ErrorCode::kIndex, "node " + std::to_string(node) + " has no attributes");
  return {values_.data() + static_cast<size_t>(row_of_[node]) * names_.size(), names_.size()};
}

std::vector<int32_t> AttributeTable::labels(std::span<const NodeId> nodes, size_t k) const {
  std::vector<int32_t> out;
  out.reserve(nodes.size());
  for (NodeId v : nodes) out.push_back(value(v, k));
  return out;
}

void AttributeTable::set(NodeId node, std::span<const int32_t> values) {
  if (node >= row_of_.size()) fail(ErrorCode::kIndex, "node id out of range");
  if (values.size() != names_.size()) fail(ErrorCode::kShape, "attribute vector length");
  for (size_t k = 0; k < values.size(); ++k) {
    if (values[k] < 0 || static_cast<size_t>(values[k]) >= categories_[k].size()) {
      fail(ErrorCode::kIndex, "attribute value out of range");
    }
  }
  if (row_of_[node] < 0) {
    row_of_[node] = static_cast<int64_t>(nodes_.size());
    values_.insert(values_.end(), values.begin(), values.end());
    nodes_.insert(std::upper_bound(nodes_.begin(), nodes_.end(), node), node);
    return;
  }
  std::copy(values.begin(), values.end(),
            values_.begin() + static_cast<std::ptrdiff_t>(row_of_[node] * names_.size()));
}

AttributeTable load_attributes(const std::filesystem::path& path, const Graph& graph,
                               NodeType sensitive_type) {
  LineReader reader(path);
  std::vector<std::string> names;
  std::vector<RawRecord> records;
  std::string line;
  while (reader.next(line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto parts = split(line, "\t");
    const size_t ln = reader.line_number();
    if (parts.size() != 3 || parts[0].empty() || parts[1].empty() || parts[2].empty()) {
      fail(ErrorCode::kParse,
           path.string() + ":" + std::to_string(ln) + ": expected node<TAB>attr_name<TAB>value");
    }
    const auto node = graph.find_node(sensitive_type, parts[0]);
    if (!node) {
      for (NodeType t = 0; t < graph.num_types(); ++t) {
        if (t != sensitive_type && graph.find_node(t, parts[0])) {
          fail(ErrorCode::kType, path.string() + ":" + std::to_string(ln) + ": node '" + parts[0] +
                                     "' is a " + graph.type_name(t) + ", not a " +
                                     graph.type_name(sensitive_type));
        }
      }
      fail(ErrorCode::kIndex,
           path.string() + ":" + std::to_string(ln) + ": unknown node '" + parts[0] + "'");
    }
    auto it = std::find(names.begin(), names.end(), parts[1]);
    if (it == names.end()) {
      names.push_back(parts[1]);
      it = names.end() - 1;
    }
    records.push_back({*node, static_cast<size_t>(it - names.begin()), parts[2], ln});
  }
  return assemble(graph, sensitive_type, names, records, path.string());
}

AttributeTable load_movielens_users(const std::filesystem::path& path, const Graph& graph,
                                    NodeType sensitive_type) {
  LineReader reader(path);
  const std::vector<std::string> names = {"gender", "age", "occupation"};
  std::vector<RawRecord> records;
  std::string line;
  while (reader.next(line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto parts = split(line, "::");
    const size_t ln = reader.line_number();
    if (parts.size() != 5) {
      fail(ErrorCode::kParse, path.string() + ":" + std::to_string(ln) +
                                  ": expected UserID::Gender::Age::Occupation::Zip");
    }
    const auto node = graph.find_node(sensitive_type, parts[0]);
    if (!node) continue;
    for (size_t k = 0; k < 3; ++k) records.push_back({*node, k, parts[k + 1], ln});
  }
  return assemble(graph, sensitive_type, names, records, path.string());
}

void write_attributes(const std::filesystem::path& path, const Graph& graph,
                      const AttributeTable& table) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  for (NodeId v : table.nodes()) {
    for (size_t k = 0; k < table.num_attributes(); ++k) {
      out << graph.node_name(v) << '\t' << table.name(k) << '\t'
          << table.categories(k)[static_cast<size_t>(table.value(v, k))] << '\n';
    }
  }
}

AttributeTable derive_edge_attributes(const Graph& graph, std::span<const NodeId> sensitive,
                                      NodeType sensitive_type) {
  if (sensitive.empty()) fail(ErrorCode::kSchema, "sensitive node list is empty");
  std::map<NodeId, size_t> slot;
  std::vector<std::string> names;
  for (size_t k = 0; k < sensitive.size(); ++k) {
    const NodeId s = sensitive[k];
    if (s >= graph.num_nodes()) fail(ErrorCode::kIndex, "unknown sensitive node " + std::to_string(s));
    slot.emplace(s, k);
    names.push_back("edge:" + graph.node_name(s));
  }
  std::vector<std::vector<std::string>> categories(sensitive.size(), {"0", "1"});
  AttributeTable table(graph.num_nodes(), sensitive_type, names, categories);

  std::vector<std::vector<int32_t>> values(graph.num_nodes());
  const auto members = graph.nodes_of_type(sensitive_type);
  for (NodeId v : members) values[v].assign(sensitive.size(), 0);
  auto mark = [&](NodeId node, NodeId other) {
    if (graph.node_type(node) != sensitive_type) return;
    const auto it = slot.find(other);
    if (it != slot.end()) values[node][it->second] = 1;
  };
  for (const Triple& e : graph.edges()) {
    mark(e.head, e.tail);
    mark(e.tail, e.head);
  }
  for (NodeId v : members) table.set(v, values[v]);
  return table;
}

std::vector<NodeId> select_sensitive_nodes(const Graph& graph, NodeType type, size_t count,
                                           size_t top, size_t exclude_top, Rng& rng) {
  const auto degree = graph.degrees();
  auto candidates = graph.nodes_of_type(type);
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](NodeId a, NodeId b) { return degree[a] > degree[b]; });
  const size_t end = std::min(top, candidates.size());
  if (exclude_top >= end || end - exclude_top < count) {
    fail(ErrorCode::kConfig, "not enough candidate sensitive nodes in degree ranks [" +
                                 std::to_string(exclude_top) + ", " + std::to_string(end) + ")");
  }
  std::vector<NodeId> pool(candidates.begin() + static_cast<std::ptrdiff_t>(exclude_top),
                           candidates.begin() + static_cast<std::ptrdiff_t>(end));
  rng.shuffle(pool);
  pool.resize(count);
  return pool;
}

}  // namespace fairgraph
