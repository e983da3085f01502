#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fairgraph/adam.hpp"
#include "fairgraph/attributes.hpp"
#include "fairgraph/encoders.hpp"
#include "fairgraph/fairness.hpp"
#include "fairgraph/graph.hpp"
#include "fairgraph/sampling.hpp"

namespace fairgraph {

struct TrainingConfig {
  Family family = Family::kDot;
  size_t dim = 16;
  size_t epochs = 10;
  size_t batch_size = 512;
  double learning_rate = 1e-3;
  uint64_t seed = 1;
  NegativeSamplerConfig negatives;
};

struct AdversarialConfig {
  double lambda = 1000.0;  // 0 disables filters and discriminators entirely
  size_t encoder_steps = 1;
  size_t discriminator_steps = 5;
  double mask_p = 0.5;
  std::optional<Mask> fixed_mask;  // non-compositional runs pin S
  std::vector<Mask> heldout;       // never drawn during training
  size_t max_rejections = 1000;
  FilterArchitecture filter;
  DiscriminatorArchitecture discriminator;
  // Discriminator learning rate; 0 uses the training learning rate.
  double discriminator_learning_rate = 0.0;
};

// Encoder plus, for adversarial runs, filters and discriminators.
struct TrainedModel {
  std::unique_ptr<EdgeModel<float>> model;
  std::unique_ptr<FilterBank<float>> filters;
  std::unique_ptr<DiscriminatorBank<float>> discriminators;
  AdversarialConfig adversarial;

  bool adversarial_enabled() const { return filters != nullptr; }
};

struct EpochRecord {
  size_t epoch = 0;
  double edge_loss = 0.0;    // mean over batches
  double adversarial = 0.0;  // mean over batches of the adversarial term
  // Per attribute, discriminator accuracy on filtered embeddings at the first
  // discriminator step of each round; empty when the attribute never appeared.
  std::vector<std::optional<double>> discriminator_accuracy;
  std::map<Mask, size_t> masks;  // masks drawn this epoch
  size_t negative_fallbacks = 0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;

  void write_jsonl(const std::filesystem::path& path) const;
  std::string to_jsonl() const;
};

struct RoundStats {
  double edge_loss = 0.0;
  double adversarial = 0.0;
  double total = 0.0;
  AdversaryOutcome discriminator;  // from the first discriminator step
};

// Alternating minimax optimization over minibatches. One round per batch:
// draw S, run T encoder/filter steps on the combined loss with the
// discriminators frozen, then T' discriminator steps with the encoder frozen.
class AdversarialTrainer {
 public:
  AdversarialTrainer(const Graph& graph, std::span<const Triple> train_edges,
                     const AttributeTable* attributes, TrainingConfig config,
                     AdversarialConfig adversarial);

  // Draws a mask, redrawing held-out ones.
  Mask sample_mask();

  RoundStats round(std::span<const Triple> batch, Mask mask);
  // One encoder/filter update; returns the combined loss before the step.
  CombinedLossValue encoder_step(std::span<const Triple> batch,
                                 std::span<const Triple> negatives, Mask mask);
  // One discriminator update; returns the outcome before the step.
  AdversaryOutcome discriminator_step(std::span<const Triple> batch, Mask mask);

  EpochRecord run_epoch();
  TrainedModel& state() { return state_; }
  const TrainingLog& log() const { return log_; }
  TrainedModel release() && { return std::move(state_); }

 private:
  // Filtered embeddings and labels of the sensitive nodes of `batch`.
  std::pair<Matrix<float>, Matrix<int32_t>> adversary_inputs(std::span<const Triple> batch, Mask mask);
  AdversaryOutcome discriminator_update(const Matrix<float>& z, const Matrix<int32_t>& labels, Mask mask);

  const Graph& graph_;
  std::vector<Triple> train_;
  const AttributeTable* attributes_;
  TrainingConfig config_;
  AdversarialConfig adversarial_;
  TrainedModel state_;

  std::unique_ptr<Adam<float>> model_opt_;
  std::vector<std::unique_ptr<Adam<float>>> filter_opts_;
  std::vector<std::unique_ptr<Adam<float>>> disc_opts_;

  NegativeSampler sampler_;
  BatchIterator batches_;
  Rng negative_rng_;
  Rng mask_rng_;
  Rng dropout_rng_;
  MaskDistribution masks_;
  size_t epoch_ = 0;
  size_t negative_fallbacks_ = 0;
  TrainingLog log_;
};

struct TrainingResult {
  TrainedModel trained;
  TrainingLog log;
};

// λ = 0 (or no attribute table) trains the plain encoder.
TrainingResult train(const Graph& graph, std::span<const Triple> train_edges,
                     const AttributeTable* attributes, const TrainingConfig& config,
                     const AdversarialConfig& adversarial,
                     const std::function<void(const EpochRecord&)>& on_epoch = {});

// K single-attribute runs, S fixed to {k}, seeds offset by k.
std::vector<TrainingResult> train_noncompositional(const Graph& graph,
                                                   std::span<const Triple> train_edges,
                                                   const AttributeTable& attributes,
                                                   const TrainingConfig& config,
                                                   const AdversarialConfig& adversarial,
                                                   const std::function<void(size_t, const EpochRecord&)>& on_epoch = {});

}  // namespace fairgraph
