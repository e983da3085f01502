#include "fairgraph/commands.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include "fairgraph/checkpoint.hpp"
#include "fairgraph/dataset.hpp"
#include "fairgraph/error.hpp"
#include "fairgraph/trainer.hpp"

namespace fairgraph {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "failed writing " + path.string());
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

std::string checkpoint_name(std::optional<size_t> attribute) {
  return attribute ? "model-k" + std::to_string(*attribute) + ".ckpt" : "model.ckpt";
}

std::string log_name(std::optional<size_t> attribute) {
  return attribute ? "train_log-k" + std::to_string(*attribute) + ".jsonl" : "train_log.jsonl";
}

void progress(std::ostream* log, const std::string& prefix, const EpochRecord& r) {
  if (!log) return;
  *log << prefix << "epoch " << r.epoch << " edge_loss " << r.edge_loss;
  if (!r.discriminator_accuracy.empty()) {
    *log << " adversarial " << r.adversarial << " d_acc";
    for (const auto& a : r.discriminator_accuracy) {
      if (a) {
        *log << ' ' << *a;
      } else {
        *log << " -";
      }
    }
  }
  *log << '\n';
}

std::string format_lambda(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

void apply_overrides(RunConfig& config, const Overrides& o) {
  if (o.lambda) config.fairness.lambda = *o.lambda;
  if (o.seed) config.training.seed = *o.seed;
  if (o.epochs) config.training.epochs = *o.epochs;
  if (o.out) config.output_dir = *o.out;
  if (o.lambdas) config.fairness.sweep_lambdas = *o.lambdas;
}

fs::path run_directory(const RunConfig& config) {
  return fs::path(config.output_dir) /
         ("run-seed" + std::to_string(config.training.seed) + "-" + config_hash(config));
}

fs::path cmd_prepare(const RunConfig& config, std::ostream* log) {
  validate(config);
  const Dataset ds = build_dataset(config.dataset);
  const fs::path dir = data_path(config.dataset.dir);
  write_dataset(dir, ds);
  RunConfig dataset_only;
  dataset_only.dataset = config.dataset;
  write_file(dir / "prepare.conf", resolved_text(dataset_only));
  if (log) {
    *log << "prepared " << dir.string() << ": " << ds.graph.num_nodes() << " nodes, " << ds.train.size()
         << " train / " << ds.test.size() << " test edges, "
         << (ds.attributes ? ds.attributes->num_attributes() : 0) << " attributes\n";
  }
  return dir;
}

fs::path cmd_train(const RunConfig& config, std::ostream* log) {
  validate(config);
  const Dataset ds = read_dataset(data_path(config.dataset.dir));
  const AttributeTable* attrs = ds.attribute_table();
  const fs::path dir = run_directory(config);
  make_dirs(dir);
  write_file(dir / "config.resolved", resolved_text(config));

  const TrainingConfig tc = training_config(config);
  const AdversarialConfig ac = adversarial_config(config, attrs ? attrs->num_attributes() : 0);
  nlohmann::json run = {{"seed", config.training.seed}, {"config_hash", config_hash(config)}};

  if (config.fairness.noncompositional && config.fairness.lambda > 0.0) {
    if (!attrs) fail(ErrorCode::kConfig, "fairness.noncompositional needs sensitive attributes");
    auto results = train_noncompositional(ds.graph, ds.train, *attrs, tc, ac,
                                          [&](size_t k, const EpochRecord& r) {
                                            progress(log, "[k" + std::to_string(k) + "] ", r);
                                          });
    for (size_t k = 0; k < results.size(); ++k) {
      run["attribute"] = k;
      save_checkpoint(dir / checkpoint_name(k), results[k].trained, ds.graph, attrs, run);
      results[k].log.write_jsonl(dir / log_name(k));
    }
  } else {
    auto result = train(ds.graph, ds.train, attrs, tc, ac,
                        [&](const EpochRecord& r) { progress(log, "", r); });
    save_checkpoint(dir / checkpoint_name(std::nullopt), result.trained, ds.graph, attrs, run);
    result.log.write_jsonl(dir / log_name(std::nullopt));
  }
  if (log) *log << "run directory " << dir.string() << '\n';
  return dir;
}

std::vector<MetricsReport> cmd_evaluate(const RunConfig& config, const std::optional<fs::path>& checkpoint,
                                        std::ostream* log) {
  validate(config);
  const Dataset ds = read_dataset(data_path(config.dataset.dir));
  const size_t k_count = ds.attributes ? ds.attributes->num_attributes() : 0;

  std::vector<fs::path> paths;
  fs::path out_dir;
  if (checkpoint) {
    paths.push_back(*checkpoint);
    out_dir = checkpoint->parent_path();
  } else {
    out_dir = run_directory(config);
    if (config.fairness.noncompositional && config.fairness.lambda > 0.0) {
      for (size_t k = 0; k < k_count; ++k) paths.push_back(out_dir / checkpoint_name(k));
    } else {
      paths.push_back(out_dir / checkpoint_name(std::nullopt));
    }
  }
  if (out_dir.empty()) out_dir = ".";

  std::vector<MetricsReport> reports;
  for (const auto& path : paths) {
    auto loaded = load_checkpoint(path);
    require_compatible(loaded.info, ds.graph);
    Mask mask = 0;
    std::string label = "baseline";
    if (loaded.trained.adversarial_enabled()) {
      if (loaded.info.cardinalities.size() != k_count) {
        fail(ErrorCode::kCompatibility, path.string() + ": attribute count differs from the dataset");
      }
      if (loaded.info.run.contains("attribute")) {
        const size_t k = loaded.info.run.at("attribute").get<size_t>();
        mask = Mask{1} << k;
        label = "attribute-" + std::to_string(k);
      } else {
        mask = full_mask(k_count);
        label = "compositional";
      }
    }
    if (log) *log << "evaluating " << path.string() << " (" << label << ")\n";
    reports.push_back(evaluate_model(loaded.trained, ds, config, mask, label));
  }

  nlohmann::json all = nlohmann::json::array();
  std::string table;
  for (const auto& r : reports) {
    all.push_back(r.to_json());
    table += r.to_table() + "\n";
  }
  make_dirs(out_dir);
  write_file(out_dir / "config.resolved", resolved_text(config));
  write_file(out_dir / "metrics.json", nlohmann::json{{"reports", all}}.dump(2) + "\n");
  write_file(out_dir / "metrics.txt", table);
  if (log) *log << table;
  return reports;
}

std::vector<CurvePoint> cmd_sweep(const RunConfig& config, std::ostream* log, fs::path* sweep_dir) {
  validate(config);
  std::vector<CurvePoint> points;
  for (double lambda : config.fairness.sweep_lambdas) {
    RunConfig point = config;
    point.fairness.lambda = lambda;
    if (log) *log << "sweep: lambda " << format_lambda(lambda) << '\n';
    cmd_train(point, log);
    const auto reports = cmd_evaluate(point, std::nullopt, nullptr);
    for (const auto& r : reports) {
      const std::string prefix = reports.size() > 1 ? r.label + "/" : "";
      for (const auto& row : r.leakage) {
        points.push_back({lambda, prefix + "leakage_" + row.name, row.probe.score});
      }
      if (r.task) points.push_back({lambda, prefix + r.task->name, r.task->value});
      for (const auto& b : r.bias) points.push_back({lambda, prefix + "bias_" + b.name, b.value});
    }
  }

  const fs::path dir = fs::path(config.output_dir) /
                       ("sweep-seed" + std::to_string(config.training.seed) + "-" + config_hash(config));
  make_dirs(dir);
  write_file(dir / "config.resolved", resolved_text(config));
  write_file(dir / "curve.csv", curve_csv(points));
  std::map<std::string, std::vector<CurvePoint>> by_metric;
  for (const auto& p : points) by_metric[p.metric].push_back(p);
  for (const auto& [metric, rows] : by_metric) {
    std::string name = metric;
    for (auto& c : name) {
      if (c == '/' || c == ' ') c = '_';
    }
    write_file(dir / ("curve-" + name + ".csv"), curve_csv(rows));
  }
  if (log) *log << "sweep directory " << dir.string() << '\n';
  if (sweep_dir) *sweep_dir = dir;
  return points;
}

std::string curve_csv(const std::vector<CurvePoint>& points) {
  std::string out = "lambda,metric,value\n";
  for (const auto& p : points) {
    char value[32];
    std::snprintf(value, sizeof(value), "%.6f", p.value);
    out += format_lambda(p.lambda) + "," + p.metric + "," + value + "\n";
  }
  return out;
}

}  // namespace fairgraph
