#include "fairgraph/report.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "fairgraph/error.hpp"

namespace fairgraph {

namespace {

using nlohmann::json;

json probe_json(const ProbeResult& r) {
  return {{"metric", r.metric},
          {"score", r.score},
          {"split", "node-test"},
          {"train_count", r.train_count},
          {"count", r.test_count},
          {"split_seed", r.split_seed}};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// Columns padded to their widest cell.
std::string aligned(const std::vector<std::vector<std::string>>& rows) {
  std::vector<size_t> width;
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()), 0);
    for (size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (size_t i = 0; i < r.size(); ++i) {
      line += r[i];
      if (i + 1 < r.size()) line += std::string(width[i] - r[i].size() + 2, ' ');
    }
    out += line + "\n";
  }
  return out;
}

}  // namespace

ProbeConfig probe_config(const RunConfig& c) {
  ProbeConfig p;
  p.architecture.layers = c.model.discriminator_layers;
  p.architecture.hidden = c.model.discriminator_hidden;
  p.architecture.dropout = c.model.discriminator_dropout;
  p.epochs = c.evaluation.probe_epochs;
  p.batch_size = c.evaluation.probe_batch_size;
  p.learning_rate = c.evaluation.probe_learning_rate;
  p.train_ratio = c.evaluation.probe_train_ratio;
  p.seed = c.evaluation.probe_seed;
  return p;
}

MetricsReport evaluate_model(TrainedModel& trained, const Dataset& ds, const RunConfig& config,
                             Mask mask, const std::string& label) {
  MetricsReport report;
  report.label = label;
  report.mask = trained.adversarial_enabled() ? mask : 0;
  const AttributeTable* attrs = ds.attribute_table();
  const ProbeConfig probe = probe_config(config);
  const Family family = trained.model->family();
  report.metadata = {{"seed", config.training.seed},
                     {"lambda", trained.adversarial_enabled() ? trained.adversarial.lambda : 0.0},
                     {"mask_p", trained.adversarial.mask_p},
                     {"mask", mask_to_string(report.mask)},
                     {"mask_policy", config.fairness.noncompositional ? "single-attribute" : "compositional"},
                     {"family", to_string(family)},
                     {"probe_seed", probe.seed}};

  if (attrs) {
    std::vector<size_t> all(attrs->num_attributes());
    std::iota(all.begin(), all.end(), size_t{0});
    report.leakage = leakage_table(trained, *attrs, report.mask, all, probe);
  }

  std::span<const Triple> test = ds.test;
  if (family == Family::kTransD) {
    if (config.evaluation.mean_rank_limit > 0 && test.size() > config.evaluation.mean_rank_limit) {
      test = test.first(config.evaluation.mean_rank_limit);
    }
    report.task = TaskMetric{"mean_rank", mean_rank(trained, attrs, test, CorruptionMode::kEither, report.mask),
                             "test", test.size()};
  } else if (family == Family::kRating) {
    report.task = TaskMetric{"rmse", rmse(trained, attrs, test, ds.graph.relation_values(), report.mask),
                             "test", test.size()};
  } else {
    NegativeSamplerConfig nc = training_config(config).negatives;
    nc.ratio = 1;
    NegativeSampler sampler(ds.graph, ds.train, nc);
    Rng rng(Rng(config.evaluation.probe_seed).fork(21).next_u64());
    report.task = TaskMetric{"edge_auc", edge_auc(trained, attrs, test, sampler, rng, report.mask), "test",
                             test.size()};
  }

  if (family == Family::kRating && config.evaluation.bias && attrs) {
    const auto& users = attrs->nodes();
    std::vector<NodeId> items;
    for (NodeId n = 0; n < ds.graph.num_nodes(); ++n) {
      if (ds.graph.node_type(n) != attrs->sensitive_type()) items.push_back(n);
    }
    const auto predicted = rating_matrix(trained, attrs, users, items, ds.graph.relation_values(), report.mask);
    for (size_t k = 0; k < attrs->num_attributes(); ++k) {
      const auto groups = attrs->labels(users, k);
      report.bias.push_back({k, attrs->name(k),
                             prediction_bias(predicted, groups, attrs->cardinality(k)), users.size(),
                             items.size()});
    }
  }

  if (trained.adversarial_enabled() && !trained.adversarial.heldout.empty() && attrs) {
    const auto& heldout = trained.adversarial.heldout;
    std::vector<Mask> seen;
    for (Mask m = 1; m <= full_mask(attrs->num_attributes()); ++m) {
      if (std::find(heldout.begin(), heldout.end(), m) == heldout.end()) seen.push_back(m);
    }
    const size_t limit = config.evaluation.seen_masks;
    if (limit > 0 && seen.size() > limit) {
      Rng rng(Rng(probe.seed).fork(22).next_u64());
      for (size_t i = 0; i < limit; ++i) std::swap(seen[i], seen[i + rng.index(seen.size() - i)]);
      seen.resize(limit);
      std::sort(seen.begin(), seen.end());
    }
    report.heldout = heldout_combination_eval(trained, *attrs, heldout, probe, seen);
  }
  return report;
}

json MetricsReport::to_json() const {
  json out;
  out["label"] = label;
  out["metadata"] = metadata;
  auto leak = json::array();
  for (const auto& r : leakage) {
    leak.push_back({{"attribute", r.name},
                    {"index", r.attribute},
                    {"mask", mask_to_string(r.mask)},
                    {"probe", probe_json(r.probe)},
                    {"majority", probe_json(r.majority)},
                    {"random", {{"metric", r.probe.metric}, {"score", r.random}}}});
  }
  out["leakage"] = leak;
  if (task) {
    out["task"] = {{"metric", task->name}, {"value", task->value}, {"split", task->split}, {"count", task->count}};
  }
  auto b = json::array();
  for (const auto& r : bias) {
    b.push_back({{"attribute", r.name}, {"index", r.attribute}, {"value", r.value}, {"split", "all-users"},
                 {"users", r.users}, {"items", r.items}});
  }
  out["prediction_bias"] = b;
  if (heldout) {
    auto rows = json::array();
    for (const auto& r : heldout->rows) {
      rows.push_back({{"mask", mask_to_string(r.mask)}, {"attribute", r.attribute}, {"score", r.score},
                      {"heldout", r.heldout}});
    }
    json h = {{"rows", rows}, {"split", "node-test"}};
    h["heldout_mean"] = heldout->heldout_mean ? json(*heldout->heldout_mean) : json();
    h["seen_mean"] = heldout->seen_mean ? json(*heldout->seen_mean) : json();
    out["heldout"] = h;
  }
  return out;
}

std::string MetricsReport::to_table() const {
  std::ostringstream out;
  out << "model: " << label << "  lambda: " << metadata.value("lambda", 0.0)
      << "  mask: " << mask_to_string(mask) << "  seed: " << metadata.value("seed", uint64_t{0}) << "\n\n";
  if (!leakage.empty()) {
    std::vector<std::vector<std::string>> rows = {{"attribute", "metric", "probe", "majority", "random", "test n"}};
    for (const auto& r : leakage) {
      rows.push_back({r.name, r.probe.metric, fmt(r.probe.score), fmt(r.majority.score), fmt(r.random),
                      std::to_string(r.probe.test_count)});
    }
    out << aligned(rows) << "\n";
  }
  if (task) out << task->name << " (" << task->split << ", n=" << task->count << "): " << fmt(task->value) << "\n";
  if (!bias.empty()) {
    std::vector<std::vector<std::string>> rows = {{"attribute", "prediction bias"}};
    for (const auto& r : bias) rows.push_back({r.name, fmt(r.value)});
    out << "\n" << aligned(rows);
  }
  if (heldout) {
    out << "\nheld-out masks: "
        << (heldout->heldout_mean ? fmt(*heldout->heldout_mean) : std::string("n/a"))
        << "  seen masks: " << (heldout->seen_mean ? fmt(*heldout->seen_mean) : std::string("n/a")) << "\n";
  }
  return out.str();
}

}  // namespace fairgraph
