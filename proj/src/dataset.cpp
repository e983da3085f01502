#include "fairgraph/dataset.hpp"

#include <fstream>
#include <sstream>

#include "fairgraph/error.hpp"
#include "fairgraph/preprocess.hpp"
#include "fairgraph/synthetic.hpp"

namespace fairgraph {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path existing(const std::string& path, const char* key) {
  const fs::path p = data_path(path);
  if (!fs::exists(p)) fail(ErrorCode::kIo, std::string("dataset.") + key + ": no such file " + p.string());
  return p;
}

NodeType resolve_sensitive_type(const Graph& graph, const DatasetSection& config) {
  std::string name = config.sensitive_type;
  if (name.empty()) name = graph.find_type("user") ? "user" : "entity";
  const auto type = graph.find_type(name);
  if (!type) fail(ErrorCode::kConfig, "dataset.sensitive_type: graph has no node type '" + name + "'");
  return *type;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read " + path.string() + " (run prepare first?)");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

std::string triples_text(const std::vector<Triple>& triples) {
  std::string out;
  for (const auto& t : triples) {
    out += std::to_string(t.head) + '\t' + std::to_string(t.relation) + '\t' + std::to_string(t.tail) + '\n';
  }
  return out;
}

std::vector<Triple> read_triples(const fs::path& path, const Graph& graph) {
  std::vector<Triple> out;
  std::istringstream in(read_text(path));
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Triple t;
    char extra;
    std::istringstream fields(line);
    if (!(fields >> t.head >> t.relation >> t.tail) || (fields >> extra) || t.head >= graph.num_nodes() ||
        t.tail >= graph.num_nodes() || t.relation >= graph.num_relations()) {
      fail(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) + ": bad id triple");
    }
    out.push_back(t);
  }
  return out;
}

}  // namespace

Dataset build_dataset(const DatasetSection& config) {
  Dataset ds;
  json meta;
  meta["format"] = config.format;

  if (config.format == "synthetic") {
    SyntheticConfig sc;
    sc.users = config.synthetic_users;
    sc.items = config.synthetic_items;
    sc.attributes = config.synthetic_attributes;
    sc.edges_per_user = config.synthetic_edges_per_user;
    sc.signal = config.synthetic_signal;
    sc.seed = config.synthetic_seed;
    auto syn = make_synthetic(sc);
    ds.graph = std::move(syn.graph);
    ds.attributes = std::move(syn.attributes);
    meta["synthetic_seed"] = sc.seed;
  } else {
    if (config.edges.empty()) fail(ErrorCode::kConfig, "dataset.edges must be set");
    const TripleFormat format = parse_triple_format(config.format);
    GraphBuilder builder;
    prepare_builder(builder, format);
    const auto train = append_triples(builder, existing(config.edges, "edges"), format);
    if (!config.valid_edges.empty()) {
      append_triples(builder, existing(config.valid_edges, "valid_edges"), format);
    }
    std::vector<Triple> test;
    if (!config.test_edges.empty()) test = append_triples(builder, existing(config.test_edges, "test_edges"), format);
    Graph graph = std::move(builder).build();

    if (config.kcore > 0) {
      auto core = k_core(graph, config.kcore);
      graph = std::move(core.graph);
      meta["kcore"] = config.kcore;
    }

    if (!config.test_edges.empty()) {
      // Provided splits pass through; duplicates across files stay in the
      // first file that listed them.
      TripleSet in_train(train.begin(), train.end());
      ds.train = train;
      for (const auto& t : test) {
        if (!in_train.count(t)) ds.test.push_back(t);
      }
      meta["split"] = "provided";
    }
    ds.graph = std::move(graph);

    const NodeType sensitive = resolve_sensitive_type(ds.graph, config);
    if (!config.attributes.empty()) {
      ds.attributes = load_attributes(existing(config.attributes, "attributes"), ds.graph, sensitive);
    } else if (!config.users.empty()) {
      ds.attributes = load_movielens_users(existing(config.users, "users"), ds.graph, sensitive);
    } else if (config.sensitive_count > 0) {
      const auto item_type = ds.graph.find_type("item");
      const NodeType pick_from = item_type ? *item_type : sensitive;
      Rng rng(config.sensitive_seed);
      const auto nodes = select_sensitive_nodes(ds.graph, pick_from, config.sensitive_count,
                                                config.sensitive_top, config.sensitive_exclude_top, rng);
      ds.attributes = derive_edge_attributes(ds.graph, nodes, sensitive);
      auto names = json::array();
      for (NodeId n : nodes) names.push_back(ds.graph.node_name(n));
      meta["sensitive_nodes"] = names;
    }
  }

  if (!meta.contains("split")) {
    auto split = split_edges(ds.graph, config.split_ratio, config.split_seed);
    ds.train = std::move(split.train);
    ds.test = std::move(split.test);
    meta["split"] = "random";
    meta["split_ratio"] = config.split_ratio;
    meta["split_seed"] = config.split_seed;
  }
  meta["num_nodes"] = ds.graph.num_nodes();
  meta["num_relations"] = ds.graph.num_relations();
  meta["num_train"] = ds.train.size();
  meta["num_test"] = ds.test.size();
  meta["vocabulary_hash"] = ds.graph.vocabulary_hash();
  meta["num_attributes"] = ds.attributes ? ds.attributes->num_attributes() : 0;
  ds.meta = meta;
  return ds;
}

void write_dataset(const fs::path& dir, const Dataset& ds) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  const auto& g = ds.graph;

  json vocab;
  auto types = json::array();
  for (NodeType t = 0; t < g.num_types(); ++t) types.push_back(g.type_name(t));
  auto relations = json::array();
  for (RelationId r = 0; r < g.num_relations(); ++r) {
    json rel = {{"name", g.relation_name(r)}};
    if (!g.relation_values().empty()) rel["value"] = g.relation_values()[r];
    relations.push_back(rel);
  }
  auto nodes = json::array();
  for (NodeId n = 0; n < g.num_nodes(); ++n) nodes.push_back(json::array({g.node_type(n), g.node_name(n)}));
  vocab["types"] = types;
  vocab["relations"] = relations;
  vocab["nodes"] = nodes;

  // Edges outside both splits (a provided validation file) still belong to
  // the graph; keep the full list so the reload reproduces it.
  write_text(dir / "vocab.json", vocab.dump(1) + "\n");
  write_text(dir / "edges.tsv", triples_text(std::vector<Triple>(g.edges().begin(), g.edges().end())));
  write_text(dir / "train.tsv", triples_text(ds.train));
  write_text(dir / "test.tsv", triples_text(ds.test));
  if (ds.attributes) {
    const auto& a = *ds.attributes;
    json attrs;
    attrs["sensitive_type"] = g.type_name(a.sensitive_type());
    auto list = json::array();
    for (size_t k = 0; k < a.num_attributes(); ++k) {
      list.push_back({{"name", a.name(k)}, {"categories", a.categories(k)}});
    }
    attrs["attributes"] = list;
    auto rows = json::array();
    for (NodeId n : a.nodes()) {
      json row = json::array({n});
      for (int32_t v : a.values(n)) row.push_back(v);
      rows.push_back(row);
    }
    attrs["rows"] = rows;
    write_text(dir / "attributes.json", attrs.dump(1) + "\n");
  } else {
    fs::remove(dir / "attributes.json", ec);
  }
  write_text(dir / "dataset.json", ds.meta.dump(2) + "\n");
}

Dataset read_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    fail(ErrorCode::kIo, "dataset directory " + dir.string() + " does not exist (run prepare first)");
  }
  Dataset ds;
  ds.meta = read_json(dir / "dataset.json");
  const json vocab = read_json(dir / "vocab.json");
  GraphBuilder builder;
  try {
    for (const auto& t : vocab.at("types")) builder.add_type(t.get<std::string>());
    for (const auto& r : vocab.at("relations")) {
      if (r.contains("value")) {
        builder.intern_relation(r.at("name").get<std::string>(), r.at("value").get<double>());
      } else {
        builder.intern_relation(r.at("name").get<std::string>());
      }
    }
    for (const auto& n : vocab.at("nodes")) {
      builder.intern_node(n.at(0).get<NodeType>(), n.at(1).get<std::string>());
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, (dir / "vocab.json").string() + ": " + e.what());
  }
  const Graph& partial = builder.peek();
  for (const auto& t : read_triples(dir / "edges.tsv", partial)) builder.add_edge(t);
  ds.graph = std::move(builder).build();
  ds.train = read_triples(dir / "train.tsv", ds.graph);
  ds.test = read_triples(dir / "test.tsv", ds.graph);

  if (fs::exists(dir / "attributes.json")) {
    const json attrs = read_json(dir / "attributes.json");
    try {
      const auto type = ds.graph.find_type(attrs.at("sensitive_type").get<std::string>());
      if (!type) fail(ErrorCode::kFormat, "attributes.json: unknown sensitive type");
      std::vector<std::string> names;
      std::vector<std::vector<std::string>> categories;
      for (const auto& a : attrs.at("attributes")) {
        names.push_back(a.at("name").get<std::string>());
        categories.push_back(a.at("categories").get<std::vector<std::string>>());
      }
      AttributeTable table(ds.graph.num_nodes(), *type, names, categories);
      for (const auto& row : attrs.at("rows")) {
        std::vector<int32_t> values;
        for (size_t i = 1; i < row.size(); ++i) values.push_back(row.at(i).get<int32_t>());
        table.set(row.at(0).get<NodeId>(), values);
      }
      ds.attributes = std::move(table);
    } catch (const json::exception& e) {
      fail(ErrorCode::kFormat, (dir / "attributes.json").string() + ": " + e.what());
    }
  }
  if (ds.meta.value("vocabulary_hash", uint64_t{0}) != ds.graph.vocabulary_hash()) {
    fail(ErrorCode::kFormat, dir.string() + ": vocabulary does not match dataset.json");
  }
  return ds;
}

}  // namespace fairgraph
