#include "fairgraph/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "fairgraph/error.hpp"
#include "fairgraph/graph.hpp"

namespace fairgraph {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void parse_value(const std::string& text, std::string& out) { out = text; }

void parse_value(const std::string& text, size_t& out) {
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("expected a non-negative integer");
}

void parse_value(const std::string& text, double& out) {
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
    throw std::invalid_argument("expected a finite number");
  }
}

void parse_value(const std::string& text, bool& out) {
  if (text == "true" || text == "yes" || text == "1") {
    out = true;
  } else if (text == "false" || text == "no" || text == "0") {
    out = false;
  } else {
    throw std::invalid_argument("expected true or false");
  }
}

void parse_value(const std::string& text, Family& out) {
  try {
    out = parse_family(text);
  } catch (const Error&) {
    throw std::invalid_argument("expected transd, rating or dot");
  }
}

void parse_value(const std::string& text, CorruptionMode& out) {
  try {
    out = parse_corruption_mode(text);
  } catch (const Error&) {
    throw std::invalid_argument("expected head, tail or either");
  }
}

void parse_value(const std::string& text, std::vector<double>& out) {
  out.clear();
  for (const auto& part : split(text, ",")) {
    double v = 0.0;
    parse_value(trim(part), v);
    out.push_back(v);
  }
}

std::string format_value(const std::string& v) { return v; }
std::string format_value(size_t v) { return std::to_string(v); }
std::string format_value(bool v) { return v ? "true" : "false"; }
std::string format_value(Family v) { return to_string(v); }
std::string format_value(CorruptionMode v) { return to_string(v); }
std::string format_value(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}
std::string format_value(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_value(v[i]);
  return out;
}

struct Key {
  std::string section;
  std::string name;
  std::string doc;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename S, typename T>
Key key(const char* section, const char* name, S RunConfig::*sec, T S::*member, const char* doc) {
  return Key{section, name, doc,
             [sec, member](RunConfig& c, const std::string& v) { parse_value(v, c.*sec.*member); },
             [sec, member](const RunConfig& c) { return format_value(c.*sec.*member); }};
}

const std::vector<Key>& keys() {
  using R = RunConfig;
  static const std::vector<Key> table = {
      key("dataset", "format", &R::dataset, &DatasetSection::format,
          "tsv-triple | movielens-rating | bipartite-edge | synthetic"),
      key("dataset", "edges", &R::dataset, &DatasetSection::edges,
          "edge file (gzip allowed); split randomly unless test_edges is set"),
      key("dataset", "valid_edges", &R::dataset, &DatasetSection::valid_edges,
          "provided validation split; only contributes vocabulary"),
      key("dataset", "test_edges", &R::dataset, &DatasetSection::test_edges,
          "provided test split"),
      key("dataset", "attributes", &R::dataset, &DatasetSection::attributes,
          "node<TAB>attribute<TAB>value file"),
      key("dataset", "users", &R::dataset, &DatasetSection::users, "MovieLens users.dat"),
      key("dataset", "dir", &R::dataset, &DatasetSection::dir, "prepared dataset directory"),
      key("dataset", "sensitive_type", &R::dataset, &DatasetSection::sensitive_type,
          "node type carrying attributes; empty picks entity or user"),
      key("dataset", "sensitive_count", &R::dataset, &DatasetSection::sensitive_count,
          "derive this many binary edge attributes (0 = off)"),
      key("dataset", "sensitive_top", &R::dataset, &DatasetSection::sensitive_top,
          "sensitive nodes come from the top-N item degree ranks"),
      key("dataset", "sensitive_exclude_top", &R::dataset, &DatasetSection::sensitive_exclude_top,
          "skip this many highest-degree items"),
      key("dataset", "sensitive_seed", &R::dataset, &DatasetSection::sensitive_seed,
          "seed for picking sensitive nodes"),
      key("dataset", "kcore", &R::dataset, &DatasetSection::kcore, "k-core filter (0 = off)"),
      key("dataset", "split_ratio", &R::dataset, &DatasetSection::split_ratio,
          "training share of the random edge split"),
      key("dataset", "split_seed", &R::dataset, &DatasetSection::split_seed, "edge split seed"),
      key("dataset", "synthetic_users", &R::dataset, &DatasetSection::synthetic_users,
          "synthetic: user count"),
      key("dataset", "synthetic_items", &R::dataset, &DatasetSection::synthetic_items,
          "synthetic: item count"),
      key("dataset", "synthetic_attributes", &R::dataset, &DatasetSection::synthetic_attributes,
          "synthetic: binary attribute count"),
      key("dataset", "synthetic_edges_per_user", &R::dataset,
          &DatasetSection::synthetic_edges_per_user, "synthetic: edges per user"),
      key("dataset", "synthetic_signal", &R::dataset, &DatasetSection::synthetic_signal,
          "synthetic: attribute effect on item preference"),
      key("dataset", "synthetic_seed", &R::dataset, &DatasetSection::synthetic_seed,
          "synthetic: generator seed"),

      key("model", "family", &R::model, &ModelSection::family, "transd | rating | dot"),
      key("model", "dim", &R::model, &ModelSection::dim, "embedding dimension"),
      key("model", "filter_layers", &R::model, &ModelSection::filter_layers, "filter MLP depth"),
      key("model", "filter_hidden", &R::model, &ModelSection::filter_hidden,
          "filter hidden width (0 = 2 * dim)"),
      key("model", "discriminator_layers", &R::model, &ModelSection::discriminator_layers,
          "discriminator and probe MLP depth"),
      key("model", "discriminator_hidden", &R::model, &ModelSection::discriminator_hidden,
          "discriminator hidden width (0 = 2 * dim)"),
      key("model", "discriminator_dropout", &R::model, &ModelSection::discriminator_dropout,
          "dropout between discriminator layers"),

      key("fairness", "lambda", &R::fairness, &FairnessSection::lambda,
          "adversarial weight (0 = plain encoder)"),
      key("fairness", "mask_p", &R::fairness, &FairnessSection::mask_p,
          "per-attribute inclusion probability of the mask"),
      key("fairness", "encoder_steps", &R::fairness, &FairnessSection::encoder_steps,
          "encoder updates per round"),
      key("fairness", "discriminator_steps", &R::fairness, &FairnessSection::discriminator_steps,
          "discriminator updates per round"),
      key("fairness", "heldout_fraction", &R::fairness, &FairnessSection::heldout_fraction,
          "share of masks never drawn in training"),
      key("fairness", "heldout_seed", &R::fairness, &FairnessSection::heldout_seed,
          "seed choosing held-out masks"),
      key("fairness", "noncompositional", &R::fairness, &FairnessSection::noncompositional,
          "train one single-attribute model per attribute"),
      key("fairness", "discriminator_learning_rate", &R::fairness,
          &FairnessSection::discriminator_learning_rate,
          "discriminator Adam step size (0 = training learning_rate)"),
      key("fairness", "sweep_lambdas", &R::fairness, &FairnessSection::sweep_lambdas,
          "comma-separated ascending lambdas for sweep"),

      key("training", "epochs", &R::training, &TrainingSection::epochs, "training epochs"),
      key("training", "batch_size", &R::training, &TrainingSection::batch_size, "edges per batch"),
      key("training", "seed", &R::training, &TrainingSection::seed, "training seed"),
      key("training", "learning_rate", &R::training, &TrainingSection::learning_rate,
          "Adam step size"),
      key("training", "negatives", &R::training, &TrainingSection::negatives,
          "negatives per positive"),
      key("training", "corruption", &R::training, &TrainingSection::corruption,
          "head | tail | either"),
      key("training", "filtered_negatives", &R::training, &TrainingSection::filtered_negatives,
          "reject corruptions that are training edges"),
      key("training", "type_constrained", &R::training, &TrainingSection::type_constrained,
          "corrupt with nodes of the replaced node's type"),

      key("evaluation", "probe_epochs", &R::evaluation, &EvaluationSection::probe_epochs,
          "leakage probe epochs"),
      key("evaluation", "probe_batch_size", &R::evaluation, &EvaluationSection::probe_batch_size,
          "leakage probe batch size"),
      key("evaluation", "probe_learning_rate", &R::evaluation,
          &EvaluationSection::probe_learning_rate, "leakage probe Adam step size"),
      key("evaluation", "probe_train_ratio", &R::evaluation, &EvaluationSection::probe_train_ratio,
          "node share used to train probes"),
      key("evaluation", "probe_seed", &R::evaluation, &EvaluationSection::probe_seed,
          "probe split and initialization seed"),
      key("evaluation", "mean_rank_limit", &R::evaluation, &EvaluationSection::mean_rank_limit,
          "rank only the first N test triples (0 = all)"),
      key("evaluation", "seen_masks", &R::evaluation, &EvaluationSection::seen_masks,
          "seen masks probed beside held-out ones (0 = all)"),
      key("evaluation", "bias", &R::evaluation, &EvaluationSection::bias,
          "report prediction bias (rating family)"),

      Key{"output", "dir", "directory receiving run directories",
          [](RunConfig& c, const std::string& v) { c.output_dir = v; },
          [](const RunConfig& c) { return c.output_dir; }},
  };
  return table;
}

uint64_t fnv1a(const std::string& text) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string section_text(const RunConfig& config, bool with_output) {
  std::ostringstream out;
  std::string current;
  for (const auto& k : keys()) {
    if (!with_output && k.section == "output") continue;
    if (k.section != current) {
      if (!current.empty()) out << "\n";
      out << "[" << k.section << "]\n";
      current = k.section;
    }
    out << k.name << " = " << k.get(config) << "\n";
  }
  return out.str();
}

}  // namespace

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  c.preset = name;
  if (name == "kg") {
    c.dataset.format = "tsv-triple";
    c.model.family = Family::kTransD;
    c.model.dim = 20;
    c.model.discriminator_layers = 4;
    c.training.epochs = 100;
    c.training.negatives = 20;
    c.evaluation.probe_epochs = 50;
    c.evaluation.bias = false;
  } else if (name == "rating") {
    c.dataset.format = "movielens-rating";
    c.model.family = Family::kRating;
    c.model.dim = 30;
    c.model.discriminator_layers = 9;
    c.model.discriminator_dropout = 0.3;
    c.training.epochs = 200;
    c.evaluation.probe_epochs = 200;
  } else if (name == "bipartite") {
    c.dataset.format = "bipartite-edge";
    c.dataset.kcore = 10;
    c.dataset.sensitive_count = 10;
    c.dataset.sensitive_top = 100;
    c.model.family = Family::kDot;
    c.model.dim = 50;
    c.model.discriminator_layers = 9;
    c.model.discriminator_dropout = 0.3;
    c.training.epochs = 50;
    c.training.negatives = 1;
    c.training.type_constrained = true;
    c.evaluation.probe_epochs = 100;
    c.evaluation.bias = false;
  } else {
    fail(ErrorCode::kConfig, "unknown defaults preset '" + name + "' (expected kg, rating or bipartite)");
  }
  return c;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  RunConfig config;
  std::string section;
  std::set<std::string> seen;
  bool any_content = false;
  std::istringstream in(text);
  std::string raw;
  size_t line_no = 0;
  auto where = [&] { return origin + ":" + std::to_string(line_no) + ": "; };
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.rfind("defaults", 0) == 0 && (line.size() == 8 || line[8] == ' ' || line[8] == '\t')) {
      if (any_content) fail(ErrorCode::kConfig, where() + "defaults must come before any setting");
      try {
        config = preset_config(trim(line.substr(8)));
      } catch (const Error& e) {
        fail(ErrorCode::kConfig, where() + e.what());
      }
      any_content = true;
      continue;
    }
    any_content = true;
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorCode::kConfig, where() + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& k : keys()) known = known || k.section == section;
      if (!known) fail(ErrorCode::kConfig, where() + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kConfig, where() + "expected key = value");
    if (section.empty()) fail(ErrorCode::kConfig, where() + "setting outside of a section");
    const std::string name = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Key* match = nullptr;
    for (const auto& k : keys()) {
      if (k.section == section && k.name == name) match = &k;
    }
    if (!match) fail(ErrorCode::kConfig, where() + "unknown key '" + name + "' in [" + section + "]");
    if (!seen.insert(section + "." + name).second) {
      fail(ErrorCode::kConfig, where() + "duplicate key '" + name + "' in [" + section + "]");
    }
    try {
      match->set(config, value);
    } catch (const std::invalid_argument& e) {
      fail(ErrorCode::kConfig, where() + section + "." + name + ": " + e.what() + ", got '" + value + "'");
    }
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kConfig, "cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string());
}

std::string resolved_text(const RunConfig& config) {
  std::string out;
  if (!config.preset.empty()) out = "defaults " + config.preset + "\n\n";
  return out + section_text(config, true);
}

std::string config_hash(const RunConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(section_text(config, false))));
  return std::string(buf, 12);
}

std::string config_reference() {
  const RunConfig defaults;
  std::ostringstream out;
  out << "Config keys (default in brackets). Start a file with `defaults kg|rating|bipartite`\n"
         "to load a preset before the sections below.\n";
  std::string current;
  for (const auto& k : keys()) {
    if (k.section != current) {
      out << "\n[" << k.section << "]\n";
      current = k.section;
    }
    char line[160];
    std::snprintf(line, sizeof(line), "  %-28s %s [%s]\n", k.name.c_str(), k.doc.c_str(),
                  k.get(defaults).c_str());
    out << line;
  }
  return out.str();
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& message) {
    if (!ok) fail(ErrorCode::kConfig, message);
  };
  const auto& d = c.dataset;
  require(d.format == "synthetic" || d.format == "tsv-triple" || d.format == "movielens-rating" ||
              d.format == "bipartite-edge",
          "dataset.format: unknown format '" + d.format + "'");
  require(d.split_ratio > 0.0 && d.split_ratio < 1.0, "dataset.split_ratio must be in (0, 1)");
  require(d.kcore == 0 || d.test_edges.empty(), "dataset.kcore cannot be combined with provided splits");
  require(!d.dir.empty(), "dataset.dir must be set");
  require(c.model.dim >= 1, "model.dim must be positive");
  require(c.model.filter_layers >= 1, "model.filter_layers must be positive");
  require(c.model.discriminator_layers >= 1, "model.discriminator_layers must be positive");
  require(c.model.discriminator_dropout >= 0.0 && c.model.discriminator_dropout < 1.0,
          "model.discriminator_dropout must be in [0, 1)");
  const auto& f = c.fairness;
  require(f.lambda >= 0.0, "fairness.lambda must be non-negative");
  require(f.mask_p >= 0.0 && f.mask_p <= 1.0, "fairness.mask_p must be in [0, 1]");
  require(f.encoder_steps >= 1 && f.discriminator_steps >= 1, "fairness step counts must be positive");
  require(f.heldout_fraction >= 0.0 && f.heldout_fraction < 1.0,
          "fairness.heldout_fraction must be in [0, 1)");
  require(f.discriminator_learning_rate >= 0.0, "fairness.discriminator_learning_rate must be non-negative");
  require(!f.sweep_lambdas.empty(), "fairness.sweep_lambdas must not be empty");
  for (size_t i = 0; i < f.sweep_lambdas.size(); ++i) {
    require(f.sweep_lambdas[i] >= 0.0, "fairness.sweep_lambdas must be non-negative");
    if (i > 0) {
      require(f.sweep_lambdas[i] != f.sweep_lambdas[i - 1],
              "fairness.sweep_lambdas has duplicate value " + format_value(f.sweep_lambdas[i]));
      require(f.sweep_lambdas[i] > f.sweep_lambdas[i - 1], "fairness.sweep_lambdas must be ascending");
    }
  }
  const auto& t = c.training;
  require(t.epochs >= 1, "training.epochs must be positive");
  require(t.batch_size >= 1, "training.batch_size must be positive");
  require(t.learning_rate > 0.0, "training.learning_rate must be positive");
  require(t.negatives >= 1, "training.negatives must be positive");
  const auto& e = c.evaluation;
  require(e.probe_epochs >= 1 && e.probe_batch_size >= 1, "evaluation probe sizes must be positive");
  require(e.probe_learning_rate > 0.0, "evaluation.probe_learning_rate must be positive");
  require(e.probe_train_ratio > 0.0 && e.probe_train_ratio < 1.0,
          "evaluation.probe_train_ratio must be in (0, 1)");
  require(!c.output_dir.empty(), "output.dir must be set");
}

std::filesystem::path data_path(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("FAIRGRAPH_DATA_ROOT"); root && *root) {
    return std::filesystem::path(root) / p;
  }
  return p;
}

TrainingConfig training_config(const RunConfig& c) {
  TrainingConfig t;
  t.family = c.model.family;
  t.dim = c.model.dim;
  t.epochs = c.training.epochs;
  t.batch_size = c.training.batch_size;
  t.learning_rate = c.training.learning_rate;
  t.seed = c.training.seed;
  t.negatives.ratio = c.training.negatives;
  t.negatives.mode = c.training.corruption;
  t.negatives.filtered = c.training.filtered_negatives;
  t.negatives.type_constrained = c.training.type_constrained;
  return t;
}

AdversarialConfig adversarial_config(const RunConfig& c, size_t num_attributes) {
  AdversarialConfig a;
  a.lambda = c.fairness.lambda;
  a.encoder_steps = c.fairness.encoder_steps;
  a.discriminator_steps = c.fairness.discriminator_steps;
  a.mask_p = c.fairness.mask_p;
  a.discriminator_learning_rate = c.fairness.discriminator_learning_rate;
  a.filter.layers = c.model.filter_layers;
  a.filter.hidden = c.model.filter_hidden;
  a.discriminator.layers = c.model.discriminator_layers;
  a.discriminator.hidden = c.model.discriminator_hidden;
  a.discriminator.dropout = c.model.discriminator_dropout;
  if (a.lambda > 0.0 && num_attributes > 0 && c.fairness.heldout_fraction > 0.0 &&
      !c.fairness.noncompositional) {
    a.heldout = choose_heldout_masks(num_attributes, c.fairness.heldout_fraction, c.fairness.heldout_seed);
  }
  return a;
}

}  // namespace fairgraph
