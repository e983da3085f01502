#include "fairgraph/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fairgraph/error.hpp"

namespace fairgraph {

namespace {

// Rng streams derived from the run seed.
enum Stream : uint64_t {
  kModelInit = 1,
  kFairnessInit = 2,
  kBatches = 3,
  kNegatives = 4,
  kMasks = 5,
  kDropout = 6,
};

std::unique_ptr<Adam<float>> make_adam(ParamRefs<float> params, double lr) {
  AdamOptions options;
  options.learning_rate = lr;
  return std::make_unique<Adam<float>>(std::move(params), options);
}

void validate(const TrainingConfig& config, const AdversarialConfig& adv) {
  if (config.dim == 0) fail(ErrorCode::kConfig, "embedding dimension must be positive");
  if (config.batch_size == 0) fail(ErrorCode::kConfig, "batch size must be positive");
  if (!(config.learning_rate > 0.0)) fail(ErrorCode::kConfig, "learning rate must be positive");
  if (!(adv.lambda >= 0.0) || !std::isfinite(adv.lambda)) {
    fail(ErrorCode::kConfig, "lambda must be a finite non-negative number");
  }
  if (adv.encoder_steps == 0 || adv.discriminator_steps == 0) {
    fail(ErrorCode::kConfig, "encoder and discriminator steps per round must be at least 1");
  }
  if (adv.mask_p < 0.0 || adv.mask_p > 1.0) fail(ErrorCode::kConfig, "mask probability must lie in [0, 1]");
}

}  // namespace

AdversarialTrainer::AdversarialTrainer(const Graph& graph, std::span<const Triple> train_edges,
                                       const AttributeTable* attributes, TrainingConfig config,
                                       AdversarialConfig adversarial)
    : graph_(graph),
      train_(train_edges.begin(), train_edges.end()),
      attributes_(attributes),
      config_(config),
      adversarial_(std::move(adversarial)),
      sampler_(graph, train_edges, config.negatives),
      batches_(train_edges.size(), config.batch_size, Rng(config.seed).fork(kBatches).next_u64()),
      negative_rng_(Rng(config.seed).fork(kNegatives)),
      mask_rng_(Rng(config.seed).fork(kMasks)),
      dropout_rng_(Rng(config.seed).fork(kDropout)) {
  validate(config_, adversarial_);
  if (train_.empty()) fail(ErrorCode::kDegenerate, "no training edges");
  const Rng root(config_.seed);

  Rng model_rng = root.fork(kModelInit);
  state_.model = make_model<float>(config_.family, graph.num_nodes(), graph.num_relations(),
                                   config_.dim, model_rng);
  state_.adversarial = adversarial_;
  model_opt_ = make_adam(state_.model->parameters(), config_.learning_rate);

  const bool adversarial_on = attributes_ != nullptr && adversarial_.lambda > 0.0;
  if (!adversarial_on) {
    state_.adversarial.lambda = 0.0;
    return;
  }

  const size_t k_count = attributes_->num_attributes();
  masks_ = MaskDistribution{k_count, adversarial_.mask_p};
  if (adversarial_.fixed_mask && (*adversarial_.fixed_mask & ~full_mask(k_count)) != 0) {
    fail(ErrorCode::kConfig, "fixed mask selects attributes that do not exist");
  }
  Rng fair_rng = root.fork(kFairnessInit);
  state_.filters = std::make_unique<FilterBank<float>>(k_count, config_.dim, adversarial_.filter, fair_rng);
  const auto cards = attributes_->cardinalities();
  state_.discriminators = std::make_unique<DiscriminatorBank<float>>(
      config_.dim, cards, adversarial_.discriminator, fair_rng);
  const double disc_lr = adversarial_.discriminator_learning_rate > 0.0
                             ? adversarial_.discriminator_learning_rate
                             : config_.learning_rate;
  for (size_t k = 0; k < k_count; ++k) {
    filter_opts_.push_back(make_adam(state_.filters->parameters(k), config_.learning_rate));
    disc_opts_.push_back(make_adam(state_.discriminators->parameters(k), disc_lr));
  }
}

Mask AdversarialTrainer::sample_mask() {
  if (!state_.adversarial_enabled()) return 0;
  if (adversarial_.fixed_mask) return *adversarial_.fixed_mask;
  for (size_t attempt = 0; attempt < adversarial_.max_rejections; ++attempt) {
    const Mask m = masks_.sample(mask_rng_);
    if (std::find(adversarial_.heldout.begin(), adversarial_.heldout.end(), m) ==
        adversarial_.heldout.end()) {
      return m;
    }
  }
  fail(ErrorCode::kConfig, "mask sampling rejected " + std::to_string(adversarial_.max_rejections) +
                               " consecutive draws; the held-out set covers too much mass");
}

CombinedLossValue AdversarialTrainer::encoder_step(std::span<const Triple> batch,
                                                   std::span<const Triple> negatives, Mask mask) {
  auto& model = *state_.model;
  model.zero_grad();
  if (state_.filters) zero_grads(state_.filters->parameters());
  const auto value = combined_loss<float>(model, state_.filters.get(), state_.discriminators.get(),
                                          attributes_, batch, negatives, mask,
                                          state_.adversarial.lambda, Mode::kTrain, &dropout_rng_, true);
  if (!std::isfinite(value.total)) {
    fail(ErrorCode::kNumeric, "non-finite loss (edge " + std::to_string(value.edge) +
                                  ", adversarial " + std::to_string(value.adversarial) + ")");
  }
  model_opt_->step();
  for (size_t k : mask_members(mask)) filter_opts_[k]->step();
  return value;
}

std::pair<Matrix<float>, Matrix<int32_t>> AdversarialTrainer::adversary_inputs(
    std::span<const Triple> batch, Mask mask) {
  std::vector<NodeId> heads;
  std::vector<NodeId> tails;
  for (const Triple& t : batch) {
    if (attributes_->has(t.head)) heads.push_back(t.head);
    if (attributes_->has(t.tail)) tails.push_back(t.tail);
  }
  auto& model = *state_.model;
  auto* filters = state_.filters.get();
  Matrix<float> z(heads.size() + tails.size(), model.dim());
  if (!heads.empty()) {
    const auto h = slot_embeddings<float>(model, filters, attributes_, heads, Slot::kHead, mask, Mode::kEval);
    std::copy(h.data(), h.data() + h.size(), z.data());
  }
  if (!tails.empty()) {
    const auto t = slot_embeddings<float>(model, filters, attributes_, tails, Slot::kTail, mask, Mode::kEval);
    std::copy(t.data(), t.data() + t.size(), z.data() + heads.size() * model.dim());
  }
  heads.insert(heads.end(), tails.begin(), tails.end());
  return {std::move(z), label_matrix(*attributes_, heads)};
}

AdversaryOutcome AdversarialTrainer::discriminator_step(std::span<const Triple> batch, Mask mask) {
  const auto [z, labels] = adversary_inputs(batch, mask);
  return discriminator_update(z, labels, mask);
}

AdversaryOutcome AdversarialTrainer::discriminator_update(const Matrix<float>& z,
                                                          const Matrix<int32_t>& labels, Mask mask) {
  if (z.rows() == 0) return {};
  zero_grads(state_.discriminators->parameters());
  Matrix<float> d_z;
  // weight -1: the discriminators minimize the true-class cross entropy
  auto outcome = adversarial_term<float>(z, labels, *state_.discriminators, mask, Mode::kTrain,
                                         &dropout_rng_, 1.0 / static_cast<double>(z.rows()), -1.0,
                                         &d_z);
  for (size_t k : mask_members(mask)) disc_opts_[k]->step();
  return outcome;
}

RoundStats AdversarialTrainer::round(std::span<const Triple> batch, Mask mask) {
  RoundStats stats;
  NegativeBatch negatives;
  if (state_.model->uses_negatives()) negatives = sampler_.sample(batch, negative_rng_);
  for (size_t t = 0; t < adversarial_.encoder_steps; ++t) {
    const auto value = encoder_step(batch, negatives.negatives, mask);
    if (t == 0) {
      stats.edge_loss = value.edge;
      stats.adversarial = value.adversarial;
      stats.total = value.total;
    }
  }
  if (state_.adversarial_enabled() && mask != 0) {
    // The encoder is frozen for the whole phase, so its output is computed once.
    const auto [z, labels] = adversary_inputs(batch, mask);
    for (size_t t = 0; t < adversarial_.discriminator_steps; ++t) {
      auto outcome = discriminator_update(z, labels, mask);
      if (t == 0) stats.discriminator = std::move(outcome);
    }
  }
  stats.discriminator.correct.resize(attributes_ ? attributes_->num_attributes() : 0);
  stats.discriminator.seen.resize(stats.discriminator.correct.size());
  negative_fallbacks_ += negatives.fallbacks;
  return stats;
}

EpochRecord AdversarialTrainer::run_epoch() {
  EpochRecord record;
  record.epoch = ++epoch_;
  batches_.next_epoch();
  const size_t k_count = state_.adversarial_enabled() ? attributes_->num_attributes() : 0;
  std::vector<size_t> correct(k_count, 0);
  std::vector<size_t> seen(k_count, 0);
  negative_fallbacks_ = 0;

  const size_t n_batches = batches_.num_batches();
  std::vector<Triple> batch;
  for (size_t b = 0; b < n_batches; ++b) {
    batch.clear();
    for (size_t idx : batches_.batch(b)) batch.push_back(train_[idx]);
    const Mask mask = sample_mask();
    if (state_.adversarial_enabled()) ++record.masks[mask];
    RoundStats stats;
    try {
      stats = round(batch, mask);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNumeric) throw;
      std::ostringstream msg;
      msg << e.what() << " at epoch " << record.epoch << ", batch " << b << " (lambda "
          << state_.adversarial.lambda << ", mask " << mask_to_string(mask) << ")";
      fail(ErrorCode::kNumeric, msg.str());
    }
    record.edge_loss += stats.edge_loss;
    record.adversarial += stats.adversarial;
    for (size_t k = 0; k < k_count; ++k) {
      correct[k] += stats.discriminator.correct[k];
      seen[k] += stats.discriminator.seen[k];
    }
  }
  record.edge_loss /= static_cast<double>(n_batches);
  record.adversarial /= static_cast<double>(n_batches);
  record.discriminator_accuracy.resize(k_count);
  for (size_t k = 0; k < k_count; ++k) {
    if (seen[k] > 0) {
      record.discriminator_accuracy[k] = static_cast<double>(correct[k]) / static_cast<double>(seen[k]);
    }
  }
  record.negative_fallbacks = negative_fallbacks_;
  log_.epochs.push_back(record);
  return record;
}

std::string TrainingLog::to_jsonl() const {
  std::string out;
  for (const auto& r : epochs) {
    nlohmann::json j;
    j["epoch"] = r.epoch;
    j["edge_loss"] = r.edge_loss;
    j["adversarial"] = r.adversarial;
    auto acc = nlohmann::json::array();
    for (const auto& a : r.discriminator_accuracy) {
      acc.push_back(a ? nlohmann::json(*a) : nlohmann::json());
    }
    j["discriminator_accuracy"] = acc;
    auto masks = nlohmann::json::object();
    for (const auto& [m, n] : r.masks) masks[mask_to_string(m)] = n;
    j["masks"] = masks;
    j["negative_fallbacks"] = r.negative_fallbacks;
    out += j.dump() + "\n";
  }
  return out;
}

void TrainingLog::write_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << to_jsonl();
}

TrainingResult train(const Graph& graph, std::span<const Triple> train_edges,
                     const AttributeTable* attributes, const TrainingConfig& config,
                     const AdversarialConfig& adversarial,
                     const std::function<void(const EpochRecord&)>& on_epoch) {
  AdversarialTrainer trainer(graph, train_edges, attributes, config, adversarial);
  for (size_t e = 0; e < config.epochs; ++e) {
    const auto record = trainer.run_epoch();
    if (on_epoch) on_epoch(record);
  }
  TrainingLog log = trainer.log();
  return {std::move(trainer).release(), std::move(log)};
}

std::vector<TrainingResult> train_noncompositional(const Graph& graph,
                                                   std::span<const Triple> train_edges,
                                                   const AttributeTable& attributes,
                                                   const TrainingConfig& config,
                                                   const AdversarialConfig& adversarial,
                                                   const std::function<void(size_t, const EpochRecord&)>& on_epoch) {
  std::vector<TrainingResult> out;
  for (size_t k = 0; k < attributes.num_attributes(); ++k) {
    TrainingConfig c = config;
    c.seed = config.seed + k;
    AdversarialConfig a = adversarial;
    a.fixed_mask = Mask{1} << k;
    a.heldout.clear();
    std::function<void(const EpochRecord&)> forward;
    if (on_epoch) forward = [&, k](const EpochRecord& r) { on_epoch(k, r); };
    out.push_back(train(graph, train_edges, &attributes, c, a, forward));
  }
  return out;
}

}  // namespace fairgraph
