#include "fairgraph/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "fairgraph/error.hpp"

namespace fairgraph {

namespace {

constexpr char kMagic[8] = {'F', 'G', 'C', 'K', 'P', 'T', '\0', '\0'};

uint64_t fnv1a(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, size_t& pos) {
  if (pos + sizeof(T) > in.size()) fail(ErrorCode::kFormat, "checkpoint is truncated");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

nlohmann::json vocabulary_json(const Graph& graph) {
  nlohmann::json v;
  auto types = nlohmann::json::array();
  for (NodeType t = 0; t < graph.num_types(); ++t) types.push_back(graph.type_name(t));
  auto nodes = nlohmann::json::array();
  for (NodeId n = 0; n < graph.num_nodes(); ++n) {
    nodes.push_back(nlohmann::json::array({graph.node_type(n), graph.node_name(n)}));
  }
  auto relations = nlohmann::json::array();
  for (RelationId r = 0; r < graph.num_relations(); ++r) relations.push_back(graph.relation_name(r));
  v["types"] = types;
  v["nodes"] = nodes;
  v["relations"] = relations;
  return v;
}

}  // namespace

TensorRefs<float> all_tensors(TrainedModel& trained) {
  TensorRefs<float> out = trained.model->tensors();
  if (trained.filters) {
    for (auto& t : trained.filters->tensors()) out.push_back(t);
  }
  if (trained.discriminators) {
    for (auto& t : trained.discriminators->tensors()) out.push_back(t);
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, TrainedModel& trained, const Graph& graph,
                     const AttributeTable* attributes, const nlohmann::json& run) {
  const auto& model = *trained.model;
  const auto& adv = trained.adversarial;
  nlohmann::json header;
  header["family"] = to_string(model.family());
  header["dim"] = model.dim();
  header["num_nodes"] = model.num_nodes();
  header["num_relations"] = model.num_relations();
  header["vocabulary_hash"] = graph.vocabulary_hash();
  header["vocabulary"] = vocabulary_json(graph);
  header["lambda"] = trained.adversarial_enabled() ? adv.lambda : 0.0;
  header["mask_p"] = adv.mask_p;
  if (trained.adversarial_enabled()) {
    if (!attributes) fail(ErrorCode::kUsage, "adversarial checkpoint needs the attribute table");
    header["cardinalities"] = attributes->cardinalities();
    header["filter"] = {{"layers", adv.filter.layers},
                        {"hidden", adv.filter.hidden},
                        {"leaky_slope", adv.filter.leaky_slope}};
    header["discriminator"] = {{"layers", adv.discriminator.layers},
                               {"hidden", adv.discriminator.hidden},
                               {"dropout", adv.discriminator.dropout},
                               {"leaky_slope", adv.discriminator.leaky_slope}};
    header["heldout"] = adv.heldout;
  }
  header["run"] = run;
  auto tensors = nlohmann::json::array();
  const auto refs = all_tensors(trained);
  for (const auto& [name, m] : refs) {
    tensors.push_back({{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}});
  }
  header["tensors"] = tensors;

  std::string bytes(kMagic, sizeof(kMagic));
  put<uint32_t>(bytes, kCheckpointVersion);
  const std::string text = header.dump();
  put<uint64_t>(bytes, text.size());
  bytes += text;
  for (const auto& [name, m] : refs) {
    bytes.append(reinterpret_cast<const char*>(m->data()), m->size() * sizeof(float));
  }
  put<uint64_t>(bytes, fnv1a(bytes));

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "failed writing checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";
  if (bytes.size() < sizeof(kMagic) + 4 + 8 + 8 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    fail(ErrorCode::kFormat, where + "not a checkpoint (bad magic)");
  }
  size_t pos = sizeof(kMagic);
  const auto version = take<uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kCompatibility, where + "checkpoint version " + std::to_string(version) +
                                        " is not supported (expected " +
                                        std::to_string(kCheckpointVersion) + ")");
  }
  const size_t body = bytes.size() - 8;
  size_t tail = body;
  if (take<uint64_t>(bytes, tail) != fnv1a(bytes.substr(0, body))) {
    fail(ErrorCode::kFormat, where + "checksum mismatch (corrupted checkpoint)");
  }
  const auto header_len = take<uint64_t>(bytes, pos);
  if (pos + header_len > body) fail(ErrorCode::kFormat, where + "header overruns the file");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, header_len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, where + "malformed header: " + e.what());
  }
  pos += header_len;

  LoadedCheckpoint out;
  auto& info = out.info;
  try {
    info.family = parse_family(header.at("family").get<std::string>());
    info.dim = header.at("dim").get<size_t>();
    info.num_nodes = header.at("num_nodes").get<size_t>();
    info.num_relations = header.at("num_relations").get<size_t>();
    info.vocabulary_hash = header.at("vocabulary_hash").get<uint64_t>();
    info.vocabulary = header.at("vocabulary");
    info.lambda = header.at("lambda").get<double>();
    info.mask_p = header.at("mask_p").get<double>();
    info.run = header.value("run", nlohmann::json());

    Rng init(0);
    auto& trained = out.trained;
    trained.model = make_model<float>(info.family, info.num_nodes, info.num_relations, info.dim, init);
    trained.adversarial.lambda = info.lambda;
    trained.adversarial.mask_p = info.mask_p;
    if (header.contains("cardinalities")) {
      info.cardinalities = header.at("cardinalities").get<std::vector<size_t>>();
      info.heldout = header.at("heldout").get<std::vector<Mask>>();
      auto& f = trained.adversarial.filter;
      const auto& fj = header.at("filter");
      f.layers = fj.at("layers").get<size_t>();
      f.hidden = fj.at("hidden").get<size_t>();
      f.leaky_slope = fj.at("leaky_slope").get<double>();
      auto& d = trained.adversarial.discriminator;
      const auto& dj = header.at("discriminator");
      d.layers = dj.at("layers").get<size_t>();
      d.hidden = dj.at("hidden").get<size_t>();
      d.dropout = dj.at("dropout").get<double>();
      d.leaky_slope = dj.at("leaky_slope").get<double>();
      trained.adversarial.heldout = info.heldout;
      trained.filters = std::make_unique<FilterBank<float>>(info.cardinalities.size(), info.dim, f, init);
      trained.discriminators = std::make_unique<DiscriminatorBank<float>>(info.dim, info.cardinalities, d, init);
    }

    const auto refs = all_tensors(trained);
    const auto& listed = header.at("tensors");
    if (listed.size() != refs.size()) fail(ErrorCode::kFormat, where + "tensor count does not match the model");
    for (size_t i = 0; i < refs.size(); ++i) {
      const auto& [name, m] = refs[i];
      if (listed[i].at("name").get<std::string>() != name ||
          listed[i].at("rows").get<size_t>() != m->rows() ||
          listed[i].at("cols").get<size_t>() != m->cols()) {
        fail(ErrorCode::kFormat, where + "tensor " + std::to_string(i) + " does not match '" + name + "'");
      }
      const size_t n = m->size() * sizeof(float);
      if (pos + n > body) fail(ErrorCode::kFormat, where + "tensor data is truncated");
      std::memcpy(m->data(), bytes.data() + pos, n);
      pos += n;
    }
    if (pos != body) fail(ErrorCode::kFormat, where + "trailing bytes after tensor data");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, where + "malformed header: " + e.what());
  }
  return out;
}

void require_compatible(const CheckpointInfo& info, const Graph& graph) {
  if (info.vocabulary_hash != graph.vocabulary_hash() || info.num_nodes != graph.num_nodes() ||
      info.num_relations != graph.num_relations()) {
    fail(ErrorCode::kCompatibility,
         "checkpoint vocabulary does not match the dataset (was it trained on another prepare run?)");
  }
}

}  // namespace fairgraph
