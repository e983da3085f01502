#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairgraph/attributes.hpp"
#include "fairgraph/fairness.hpp"
#include "fairgraph/kernels.hpp"
#include "fairgraph/sampling.hpp"
#include "fairgraph/trainer.hpp"

namespace fairgraph {

// ---------------------------------------------------------------------------
// Pure metrics.

// Probability that a random positive outscores a random negative, ties
// counting one half, from mid-ranks. Needs both classes.
double auc(std::span<const double> scores, std::span<const int32_t> labels);

// Global-count F1; equals accuracy for single-label multiclass predictions.
double micro_f1(std::span<const int32_t> predictions, std::span<const int32_t> labels);

// Raw rank of the true candidate: 1 + number of candidates scoring strictly
// higher.
size_t rank_of(std::span<const double> candidate_scores, size_t true_index);

// predicted is users x items; groups[u] in [0, num_groups). Per item, the
// mean absolute difference between group-wise mean predictions over all
// unordered pairs of non-empty groups, averaged over items.
double prediction_bias(const Matrix<double>& predicted, std::span<const int32_t> groups,
                       size_t num_groups, Execution exec = Execution::kParallel);

// ---------------------------------------------------------------------------
// Leakage probes.

struct ProbeConfig {
  DiscriminatorArchitecture architecture;
  size_t epochs = 100;
  size_t batch_size = 256;
  double learning_rate = 1e-3;
  double train_ratio = 0.9;
  uint64_t seed = 1;
  size_t max_resplits = 10;
};

struct ProbeResult {
  std::string metric;  // "auc" or "micro_f1"
  double score = 0.0;
  size_t train_count = 0;
  size_t test_count = 0;
  uint64_t split_seed = 0;
};

// Trains a fresh classifier on a node split of frozen embeddings and scores
// it on the held-out nodes: AUC for binary attributes, micro-F1 otherwise.
// A single-class test split is redrawn with the next seed.
ProbeResult probe_leakage(const Matrix<float>& embeddings, std::span<const int32_t> labels,
                          size_t classes, const ProbeConfig& config);

// Most frequent training class, scored with the probe metric on the same
// split the probe would use.
ProbeResult majority_baseline(std::span<const int32_t> labels, size_t classes,
                              const ProbeConfig& config);
// Uniform guessing: 0.5 AUC for binary, 1/|A| micro-F1 otherwise.
double random_baseline(size_t classes);

// ---------------------------------------------------------------------------
// Model-level evaluation.

// Head-slot embeddings of `nodes`, sensitive nodes composed under `mask`.
Matrix<float> node_embeddings(TrainedModel& trained, const AttributeTable* attributes,
                              std::span<const NodeId> nodes, Mask mask);

// Slot embeddings of every node (filtered under `mask`).
struct EmbeddingTables {
  Matrix<float> head;
  Matrix<float> tail;
};
EmbeddingTables embedding_tables(TrainedModel& trained, const AttributeTable* attributes, Mask mask);

// Raw mean rank over test triples, corrupting the head and/or tail among
// `candidates` (all nodes when empty).
double mean_rank(TrainedModel& trained, const AttributeTable* attributes,
                 std::span<const Triple> test, CorruptionMode sides, Mask mask,
                 std::span<const NodeId> candidates = {}, Execution exec = Execution::kParallel);

// Root-mean-square error of expected ratings (rating family).
double rmse(TrainedModel& trained, const AttributeTable* attributes, std::span<const Triple> test,
            const std::vector<double>& rating_values, Mask mask);

// AUC of test edges against one sampled negative each.
double edge_auc(TrainedModel& trained, const AttributeTable* attributes,
                std::span<const Triple> test, const NegativeSampler& sampler, Rng& rng, Mask mask);

// Expected-rating matrix users x items (rating family).
Matrix<double> rating_matrix(TrainedModel& trained, const AttributeTable* attributes,
                             std::span<const NodeId> users, std::span<const NodeId> items,
                             const std::vector<double>& rating_values, Mask mask);

struct LeakageRow {
  size_t attribute = 0;
  std::string name;
  Mask mask = 0;
  ProbeResult probe;
  ProbeResult majority;
  double random = 0.0;
};

// Probes every attribute k in `attributes_to_probe` on embeddings filtered
// under `mask`.
std::vector<LeakageRow> leakage_table(TrainedModel& trained, const AttributeTable& attributes,
                                      Mask mask, std::span<const size_t> attributes_to_probe,
                                      const ProbeConfig& probe);

struct HeldoutReport {
  struct Row {
    Mask mask = 0;
    size_t attribute = 0;
    double score = 0.0;
    bool heldout = false;
  };
  std::vector<Row> rows;
  std::optional<double> heldout_mean;
  std::optional<double> seen_mean;
};

// Probes every k in S for each held-out S and each seen S (all other
// non-empty masks unless given explicitly).
HeldoutReport heldout_combination_eval(TrainedModel& trained, const AttributeTable& attributes,
                                       std::span<const Mask> heldout, const ProbeConfig& probe,
                                       std::optional<std::vector<Mask>> seen = std::nullopt);

}  // namespace fairgraph
