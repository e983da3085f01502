#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fairgraph/trainer.hpp"

namespace fairgraph {

struct DatasetSection {
  // tsv-triple | movielens-rating | bipartite-edge | synthetic
  std::string format = "bipartite-edge";
  std::string edges;           // training edges, or all edges when split here
  std::string valid_edges;     // provided splits: merged into the vocabulary only
  std::string test_edges;      // provided split; disables the random split
  std::string attributes;      // node<TAB>attribute<TAB>value file
  std::string users;           // MovieLens users.dat
  std::string dir = "dataset"; // prepared dataset directory
  std::string sensitive_type;  // empty: entity for triples, user otherwise
  size_t sensitive_count = 0;  // > 0 derives binary attributes from edges
  size_t sensitive_top = 100;
  size_t sensitive_exclude_top = 0;
  uint64_t sensitive_seed = 1;
  size_t kcore = 0;
  double split_ratio = 0.9;
  uint64_t split_seed = 1;
  // synthetic generator
  size_t synthetic_users = 2000;
  size_t synthetic_items = 200;
  size_t synthetic_attributes = 3;
  size_t synthetic_edges_per_user = 20;
  double synthetic_signal = 0.6;
  uint64_t synthetic_seed = 7;
};

struct ModelSection {
  Family family = Family::kDot;
  size_t dim = 16;
  size_t filter_layers = 2;
  size_t filter_hidden = 0;
  size_t discriminator_layers = 4;
  size_t discriminator_hidden = 0;
  double discriminator_dropout = 0.0;
};

struct FairnessSection {
  double lambda = 1000.0;
  double mask_p = 0.5;
  size_t encoder_steps = 1;
  size_t discriminator_steps = 5;
  double heldout_fraction = 0.0;
  uint64_t heldout_seed = 1;
  bool noncompositional = false;
  double discriminator_learning_rate = 0.0;
  std::vector<double> sweep_lambdas = {0.0, 10.0, 100.0, 1000.0};
};

struct TrainingSection {
  size_t epochs = 10;
  size_t batch_size = 512;
  uint64_t seed = 1;
  double learning_rate = 1e-3;
  size_t negatives = 1;
  CorruptionMode corruption = CorruptionMode::kEither;
  bool filtered_negatives = false;
  bool type_constrained = false;
};

struct EvaluationSection {
  size_t probe_epochs = 100;
  size_t probe_batch_size = 256;
  double probe_learning_rate = 1e-3;
  double probe_train_ratio = 0.9;
  uint64_t probe_seed = 1;
  size_t mean_rank_limit = 0;  // 0: every test triple
  size_t seen_masks = 20;      // seen masks probed next to held-out ones; 0: all
  bool bias = true;
};

struct RunConfig {
  std::string preset;  // value of the defaults directive, if any
  DatasetSection dataset;
  ModelSection model;
  FairnessSection fairness;
  TrainingSection training;
  EvaluationSection evaluation;
  std::string output_dir = "runs";
};

// Presets for knowledge-graph, rating and bipartite data.
RunConfig preset_config(const std::string& name);

// `[section]` headers, `key = value` pairs, `#` comments and an optional
// leading `defaults <preset>` directive. Unknown keys are rejected.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

// Every key with its value; parsing the result reproduces the config.
std::string resolved_text(const RunConfig& config);

// Content digest of the resolved config without the output section.
std::string config_hash(const RunConfig& config);

// Per-key documentation with defaults, for --help.
std::string config_reference();

void validate(const RunConfig& config);

// Relative data paths resolve against FAIRGRAPH_DATA_ROOT when it is set.
std::filesystem::path data_path(const std::string& path);

TrainingConfig training_config(const RunConfig& config);
AdversarialConfig adversarial_config(const RunConfig& config, size_t num_attributes);

}  // namespace fairgraph
