#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairgraph/config.hpp"
#include "fairgraph/dataset.hpp"
#include "fairgraph/evaluation.hpp"

namespace fairgraph {

struct TaskMetric {
  std::string name;  // mean_rank | rmse | edge_auc
  double value = 0.0;
  std::string split;
  size_t count = 0;
};

struct BiasRow {
  size_t attribute = 0;
  std::string name;
  double value = 0.0;
  size_t users = 0;
  size_t items = 0;
};

struct MetricsReport {
  std::string label;  // "compositional", "baseline", "attribute-<k>"
  nlohmann::json metadata;
  Mask mask = 0;
  std::vector<LeakageRow> leakage;
  std::optional<TaskMetric> task;
  std::vector<BiasRow> bias;
  std::optional<HeldoutReport> heldout;

  nlohmann::json to_json() const;
  std::string to_table() const;
};

// Full evaluation of one trained model on a prepared dataset. `mask` selects
// the filters applied for leakage, task and bias metrics.
MetricsReport evaluate_model(TrainedModel& trained, const Dataset& dataset, const RunConfig& config,
                             Mask mask, const std::string& label);

ProbeConfig probe_config(const RunConfig& config);

}  // namespace fairgraph
