#include "fairgraph/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "fairgraph/adam.hpp"
#include "fairgraph/error.hpp"
#include "fairgraph/losses.hpp"
#include "fairgraph/preprocess.hpp"

namespace fairgraph {

double auc(std::span<const double> scores, std::span<const int32_t> labels) {
  if (scores.size() != labels.size()) fail(ErrorCode::kShape, "auc: scores and labels differ in length");
  size_t positives = 0;
  for (int32_t l : labels) {
    if (l != 0 && l != 1) fail(ErrorCode::kIndex, "auc: labels must be 0 or 1");
    positives += l == 1;
  }
  const size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) fail(ErrorCode::kDegenerate, "auc needs both classes");

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  // Sum of mid-ranks (1-based) of the positives.
  double rank_sum = 0.0;
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) rank_sum += mid;
    }
    i = j;
  }
  const double p = static_cast<double>(positives);
  const double u = rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

double micro_f1(std::span<const int32_t> predictions, std::span<const int32_t> labels) {
  if (predictions.size() != labels.size()) fail(ErrorCode::kShape, "micro_f1: length mismatch");
  if (labels.empty()) fail(ErrorCode::kDegenerate, "micro_f1 of an empty set");
  // Single-label: every miss is one false positive and one false negative, so
  // precision = recall = accuracy.
  size_t hits = 0;
  for (size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

size_t rank_of(std::span<const double> candidate_scores, size_t true_index) {
  const double s = candidate_scores[true_index];
  size_t higher = 0;
  for (double c : candidate_scores) higher += c > s;
  return 1 + higher;
}

double prediction_bias(const Matrix<double>& predicted, std::span<const int32_t> groups,
                       size_t num_groups, Execution exec) {
  if (groups.size() != predicted.rows()) fail(ErrorCode::kShape, "prediction_bias: one group per user");
  std::vector<size_t> sizes(num_groups, 0);
  for (int32_t g : groups) {
    if (g < 0 || static_cast<size_t>(g) >= num_groups) fail(ErrorCode::kIndex, "group out of range");
    ++sizes[static_cast<size_t>(g)];
  }
  std::vector<size_t> present;
  for (size_t g = 0; g < num_groups; ++g) {
    if (sizes[g] > 0) present.push_back(g);
  }
  if (present.size() < 2) fail(ErrorCode::kDegenerate, "prediction bias needs two non-empty groups");
  const size_t items = predicted.cols();
  if (items == 0) fail(ErrorCode::kDegenerate, "prediction bias over no items");

  std::vector<double> per_item(items, 0.0);
  kernels::for_each_index(
      items,
      [&](size_t i) {
        std::vector<double> sum(num_groups, 0.0);
        for (size_t u = 0; u < predicted.rows(); ++u) sum[static_cast<size_t>(groups[u])] += predicted(u, i);
        double diff = 0.0;
        size_t pairs = 0;
        for (size_t a = 0; a < present.size(); ++a) {
          for (size_t b = a + 1; b < present.size(); ++b) {
            const double ma = sum[present[a]] / static_cast<double>(sizes[present[a]]);
            const double mb = sum[present[b]] / static_cast<double>(sizes[present[b]]);
            diff += std::abs(ma - mb);
            ++pairs;
          }
        }
        per_item[i] = diff / static_cast<double>(pairs);
      },
      exec);
  double total = 0.0;
  for (double v : per_item) total += v;
  return total / static_cast<double>(items);
}

// ---------------------------------------------------------------------------

namespace {

struct NodeSplit {
  std::vector<size_t> train;
  std::vector<size_t> test;
  uint64_t seed = 0;
};

bool single_class(std::span<const int32_t> labels, std::span<const size_t> idx) {
  for (size_t i : idx) {
    if (labels[i] != labels[idx.front()]) return false;
  }
  return true;
}

NodeSplit probe_split(std::span<const int32_t> labels, const ProbeConfig& config) {
  if (labels.size() < 2) fail(ErrorCode::kDegenerate, "probe needs at least two labelled nodes");
  for (size_t attempt = 0; attempt <= config.max_resplits; ++attempt) {
    const uint64_t seed = config.seed + attempt;
    auto [train, test] = split_indices(labels.size(), config.train_ratio, seed);
    if (train.empty() || test.empty()) fail(ErrorCode::kDegenerate, "probe split leaves an empty side");
    if (!single_class(labels, test) && !single_class(labels, train)) {
      return {std::move(train), std::move(test), seed};
    }
  }
  fail(ErrorCode::kDegenerate, "every probe split has a single-class side");
}

Matrix<float> gather_rows(const Matrix<float>& m, std::span<const size_t> rows) {
  Matrix<float> out(rows.size(), m.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    std::copy(m.row(rows[i]).begin(), m.row(rows[i]).end(), out.row(i).begin());
  }
  return out;
}

Matrix<float> gather_nodes(const Matrix<float>& m, std::span<const NodeId> nodes) {
  Matrix<float> out(nodes.size(), m.cols());
  for (size_t i = 0; i < nodes.size(); ++i) {
    std::copy(m.row(nodes[i]).begin(), m.row(nodes[i]).end(), out.row(i).begin());
  }
  return out;
}

ProbeResult score_split(std::span<const double> positive_scores, std::span<const int32_t> predictions,
                        std::span<const int32_t> test_labels, size_t classes) {
  ProbeResult r;
  if (classes == 2) {
    r.metric = "auc";
    r.score = auc(positive_scores, test_labels);
  } else {
    r.metric = "micro_f1";
    r.score = micro_f1(predictions, test_labels);
  }
  return r;
}

}  // namespace

ProbeResult probe_leakage(const Matrix<float>& embeddings, std::span<const int32_t> labels,
                          size_t classes, const ProbeConfig& config) {
  if (embeddings.rows() != labels.size()) fail(ErrorCode::kShape, "probe: one label per embedding row");
  if (classes < 2) fail(ErrorCode::kConfig, "probe needs at least two classes");
  const NodeSplit split = probe_split(labels, config);

  Rng init(Rng(split.seed).fork(11));
  Rng dropout(Rng(split.seed).fork(12));
  DenseNet<float> net(discriminator_net_config(embeddings.cols(), classes, config.architecture), init);
  AdamOptions options;
  options.learning_rate = config.learning_rate;
  Adam<float> opt(net.parameters(), options);

  BatchIterator batches(split.train.size(), config.batch_size, Rng(split.seed).fork(13).next_u64());
  std::vector<size_t> rows;
  std::vector<int32_t> batch_labels;
  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    batches.next_epoch();
    for (size_t b = 0; b < batches.num_batches(); ++b) {
      rows.clear();
      batch_labels.clear();
      for (size_t i : batches.batch(b)) {
        rows.push_back(split.train[i]);
        batch_labels.push_back(labels[split.train[i]]);
      }
      const Matrix<float> x = gather_rows(embeddings, rows);
      typename DenseNet<float>::Pass pass;
      const Matrix<float> logits = net.forward(x, Mode::kTrain, &dropout, &pass);
      Matrix<float> grad;
      opt.zero_grad();
      softmax_cross_entropy(logits, batch_labels, 1.0 / static_cast<double>(rows.size()), &grad);
      net.backward(pass, grad);
      opt.step();
    }
  }

  const Matrix<float> logits = net.predict(gather_rows(embeddings, split.test));
  std::vector<double> positive(split.test.size());
  std::vector<int32_t> predictions(split.test.size());
  std::vector<int32_t> test_labels(split.test.size());
  std::vector<float> probs(classes);
  for (size_t i = 0; i < split.test.size(); ++i) {
    softmax_row<float>(logits.row(i), probs);
    positive[i] = probs.size() > 1 ? probs[1] : 0.0;
    predictions[i] = static_cast<int32_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    test_labels[i] = labels[split.test[i]];
  }
  ProbeResult r = score_split(positive, predictions, test_labels, classes);
  r.train_count = split.train.size();
  r.test_count = split.test.size();
  r.split_seed = split.seed;
  return r;
}

ProbeResult majority_baseline(std::span<const int32_t> labels, size_t classes,
                              const ProbeConfig& config) {
  const NodeSplit split = probe_split(labels, config);
  std::vector<size_t> counts(classes, 0);
  for (size_t i : split.train) ++counts.at(static_cast<size_t>(labels[i]));
  const auto majority = static_cast<int32_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  std::vector<double> constant(split.test.size(), 1.0);
  std::vector<int32_t> predictions(split.test.size(), majority);
  std::vector<int32_t> test_labels;
  for (size_t i : split.test) test_labels.push_back(labels[i]);
  ProbeResult r = score_split(constant, predictions, test_labels, classes);
  r.train_count = split.train.size();
  r.test_count = split.test.size();
  r.split_seed = split.seed;
  return r;
}

double random_baseline(size_t classes) {
  if (classes < 2) fail(ErrorCode::kConfig, "random baseline needs at least two classes");
  return classes == 2 ? 0.5 : 1.0 / static_cast<double>(classes);
}

// ---------------------------------------------------------------------------

Matrix<float> node_embeddings(TrainedModel& trained, const AttributeTable* attributes,
                              std::span<const NodeId> nodes, Mask mask) {
  return slot_embeddings<float>(*trained.model, trained.filters.get(), attributes, nodes, Slot::kHead,
                                trained.filters ? mask : 0, Mode::kEval);
}

EmbeddingTables embedding_tables(TrainedModel& trained, const AttributeTable* attributes, Mask mask) {
  std::vector<NodeId> all(trained.model->num_nodes());
  std::iota(all.begin(), all.end(), NodeId{0});
  const Mask m = trained.filters ? mask : 0;
  EmbeddingTables t;
  t.head = slot_embeddings<float>(*trained.model, trained.filters.get(), attributes, all, Slot::kHead, m, Mode::kEval);
  t.tail = slot_embeddings<float>(*trained.model, trained.filters.get(), attributes, all, Slot::kTail, m, Mode::kEval);
  return t;
}

double mean_rank(TrainedModel& trained, const AttributeTable* attributes,
                 std::span<const Triple> test, CorruptionMode sides, Mask mask,
                 std::span<const NodeId> candidates, Execution exec) {
  if (test.empty()) fail(ErrorCode::kDegenerate, "mean rank over no test triples");
  const EmbeddingTables tables = embedding_tables(trained, attributes, mask);
  std::vector<NodeId> pool(candidates.begin(), candidates.end());
  if (pool.empty()) {
    pool.resize(trained.model->num_nodes());
    std::iota(pool.begin(), pool.end(), NodeId{0});
  }
  std::unordered_map<NodeId, size_t> position;
  for (size_t i = 0; i < pool.size(); ++i) position.emplace(pool[i], i);

  std::vector<bool> side_list;  // true: corrupt head
  if (sides != CorruptionMode::kTail) side_list.push_back(true);
  if (sides != CorruptionMode::kHead) side_list.push_back(false);

  // Checked up front: nothing may throw inside the parallel loop.
  for (const Triple& t : test) {
    for (bool head_side : side_list) {
      if (!position.contains(head_side ? t.head : t.tail)) {
        fail(ErrorCode::kIndex, "true entity is not among the candidates");
      }
    }
  }

  const EdgeModel<float>& model = *trained.model;
  const Matrix<float> pool_heads = gather_nodes(tables.head, pool);
  const Matrix<float> pool_tails = gather_nodes(tables.tail, pool);
  std::vector<double> ranks(test.size() * side_list.size(), 0.0);
  kernels::for_each_index(
      test.size(),
      [&](size_t i) {
        const Triple& t = test[i];
        for (size_t s = 0; s < side_list.size(); ++s) {
          const bool head_side = side_list[s];
          const NodeId truth = head_side ? t.head : t.tail;
          const auto it = position.find(truth);
          std::vector<Triple> triples(pool.size(), t);
          Matrix<float> fixed(pool.size(), model.dim());
          const auto fixed_row = head_side ? tables.tail.row(t.tail) : tables.head.row(t.head);
          for (size_t c = 0; c < pool.size(); ++c) {
            (head_side ? triples[c].head : triples[c].tail) = pool[c];
            std::copy(fixed_row.begin(), fixed_row.end(), fixed.row(c).begin());
          }
          const auto scores = head_side ? model.score(triples, pool_heads, fixed)
                                        : model.score(triples, fixed, pool_tails);
          const std::vector<double> as_double(scores.begin(), scores.end());
          ranks[i * side_list.size() + s] = static_cast<double>(rank_of(as_double, it->second));
        }
      },
      exec);
  double total = 0.0;
  for (double r : ranks) total += r;
  return total / static_cast<double>(ranks.size());
}

namespace {

RatingModel<float>& as_rating(TrainedModel& trained) {
  auto* rating = dynamic_cast<RatingModel<float>*>(trained.model.get());
  if (!rating) fail(ErrorCode::kUsage, "this metric needs the rating family");
  return *rating;
}

}  // namespace

double rmse(TrainedModel& trained, const AttributeTable* attributes, std::span<const Triple> test,
            const std::vector<double>& rating_values, Mask mask) {
  auto& model = as_rating(trained);
  if (test.empty()) fail(ErrorCode::kDegenerate, "rmse over no test ratings");
  if (rating_values.size() != model.num_relations()) {
    fail(ErrorCode::kShape, "one numeric value per rating relation is required");
  }
  std::vector<NodeId> heads;
  std::vector<NodeId> tails;
  for (const Triple& t : test) {
    heads.push_back(t.head);
    tails.push_back(t.tail);
  }
  const Mask m = trained.filters ? mask : 0;
  const auto h = slot_embeddings<float>(model, trained.filters.get(), attributes, heads, Slot::kHead, m, Mode::kEval);
  const auto t = slot_embeddings<float>(model, trained.filters.get(), attributes, tails, Slot::kTail, m, Mode::kEval);
  const Matrix<float> dist = model.distribution(h, t);
  double sq = 0.0;
  for (size_t i = 0; i < test.size(); ++i) {
    const std::vector<double> p(dist.row(i).begin(), dist.row(i).end());
    const double err = expected_rating(p, rating_values) - rating_values.at(test[i].relation);
    sq += err * err;
  }
  return std::sqrt(sq / static_cast<double>(test.size()));
}

double edge_auc(TrainedModel& trained, const AttributeTable* attributes,
                std::span<const Triple> test, const NegativeSampler& sampler, Rng& rng, Mask mask) {
  if (test.empty()) fail(ErrorCode::kDegenerate, "edge auc over no test edges");
  const NegativeBatch negatives = sampler.sample(test, rng);
  std::vector<Triple> all(test.begin(), test.end());
  all.insert(all.end(), negatives.negatives.begin(), negatives.negatives.end());
  std::vector<NodeId> heads;
  std::vector<NodeId> tails;
  for (const Triple& t : all) {
    heads.push_back(t.head);
    tails.push_back(t.tail);
  }
  const Mask m = trained.filters ? mask : 0;
  auto& model = *trained.model;
  const auto h = slot_embeddings<float>(model, trained.filters.get(), attributes, heads, Slot::kHead, m, Mode::kEval);
  const auto t = slot_embeddings<float>(model, trained.filters.get(), attributes, tails, Slot::kTail, m, Mode::kEval);
  const auto scores = model.score(all, h, t);
  std::vector<double> s(scores.begin(), scores.end());
  std::vector<int32_t> labels(all.size(), 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(test.size()), 1);
  return auc(s, labels);
}

Matrix<double> rating_matrix(TrainedModel& trained, const AttributeTable* attributes,
                             std::span<const NodeId> users, std::span<const NodeId> items,
                             const std::vector<double>& rating_values, Mask mask) {
  auto& model = as_rating(trained);
  const size_t d = model.dim();
  const size_t n_r = model.num_relations();
  if (rating_values.size() != n_r) fail(ErrorCode::kShape, "one numeric value per rating relation is required");
  const Mask m = trained.filters ? mask : 0;
  const auto u = slot_embeddings<float>(model, trained.filters.get(), attributes, users, Slot::kHead, m, Mode::kEval);
  const auto v = slot_embeddings<float>(model, trained.filters.get(), attributes, items, Slot::kTail, m, Mode::kEval);
  const auto& p1 = model.basis(0).value;
  const auto& p2 = model.basis(1).value;
  const auto& coeff = model.coefficients().value;

  Matrix<double> out(users.size(), items.size());
  kernels::for_each_index(items.size(), [&](size_t i) {
    // q_r = Q_r v_i, then logits(u, r) = z_u . q_r
    Matrix<double> q(n_r, d);
    for (size_t r = 0; r < n_r; ++r) {
      for (size_t a = 0; a < d; ++a) {
        double acc = 0.0;
        for (size_t b = 0; b < d; ++b) {
          const double qab = coeff(r, 0) * p1(a, b) + coeff(r, 1) * p2(a, b);
          acc += qab * v(i, b);
        }
        q(r, a) = acc;
      }
    }
    std::vector<double> logits(n_r);
    std::vector<double> probs(n_r);
    for (size_t row = 0; row < users.size(); ++row) {
      for (size_t r = 0; r < n_r; ++r) {
        double acc = 0.0;
        for (size_t a = 0; a < d; ++a) acc += u(row, a) * q(r, a);
        logits[r] = acc;
      }
      softmax_row<double>(logits, probs);
      out(row, i) = expected_rating(probs, rating_values);
    }
  });
  return out;
}

std::vector<LeakageRow> leakage_table(TrainedModel& trained, const AttributeTable& attributes,
                                      Mask mask, std::span<const size_t> attributes_to_probe,
                                      const ProbeConfig& probe) {
  const auto& nodes = attributes.nodes();
  const Matrix<float> emb = node_embeddings(trained, &attributes, nodes, mask);
  std::vector<LeakageRow> rows;
  for (size_t k : attributes_to_probe) {
    LeakageRow row;
    row.attribute = k;
    row.name = attributes.name(k);
    row.mask = trained.filters ? mask : 0;
    const auto labels = attributes.labels(nodes, k);
    row.probe = probe_leakage(emb, labels, attributes.cardinality(k), probe);
    row.majority = majority_baseline(labels, attributes.cardinality(k), probe);
    row.random = random_baseline(attributes.cardinality(k));
    rows.push_back(std::move(row));
  }
  return rows;
}

HeldoutReport heldout_combination_eval(TrainedModel& trained, const AttributeTable& attributes,
                                       std::span<const Mask> heldout, const ProbeConfig& probe,
                                       std::optional<std::vector<Mask>> seen) {
  const size_t k_count = attributes.num_attributes();
  if (!seen) {
    seen.emplace();
    for (Mask m = 1; m <= full_mask(k_count); ++m) {
      if (std::find(heldout.begin(), heldout.end(), m) == heldout.end()) seen->push_back(m);
    }
  }
  HeldoutReport report;
  const auto& nodes = attributes.nodes();
  auto run = [&](Mask m, bool is_heldout) {
    const Matrix<float> emb = node_embeddings(trained, &attributes, nodes, m);
    for (size_t k : mask_members(m)) {
      const auto labels = attributes.labels(nodes, k);
      const auto r = probe_leakage(emb, labels, attributes.cardinality(k), probe);
      report.rows.push_back({m, k, r.score, is_heldout});
    }
  };
  for (Mask m : heldout) run(m, true);
  for (Mask m : *seen) run(m, false);

  auto mean_of = [&](bool h) -> std::optional<double> {
    double sum = 0.0;
    size_t n = 0;
    for (const auto& r : report.rows) {
      if (r.heldout == h) {
        sum += r.score;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  report.heldout_mean = mean_of(true);
  report.seen_mean = mean_of(false);
  return report;
}

}  // namespace fairgraph
