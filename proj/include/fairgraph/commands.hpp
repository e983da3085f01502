#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fairgraph/config.hpp"
#include "fairgraph/report.hpp"

namespace fairgraph {

struct Overrides {
  std::optional<double> lambda;
  std::optional<uint64_t> seed;
  std::optional<size_t> epochs;
  std::optional<std::string> out;
  std::optional<std::vector<double>> lambdas;
};

void apply_overrides(RunConfig& config, const Overrides& overrides);

// <output.dir>/run-seed<seed>-<config hash>
std::filesystem::path run_directory(const RunConfig& config);

// Each command validates the config first and writes the resolved config
// next to its outputs. `log` receives progress lines when non-null.
std::filesystem::path cmd_prepare(const RunConfig& config, std::ostream* log = nullptr);
std::filesystem::path cmd_train(const RunConfig& config, std::ostream* log = nullptr);
std::vector<MetricsReport> cmd_evaluate(const RunConfig& config,
                                        const std::optional<std::filesystem::path>& checkpoint = {},
                                        std::ostream* log = nullptr);

struct CurvePoint {
  double lambda = 0.0;
  std::string metric;
  double value = 0.0;
};

// Trains and evaluates one run per lambda; writes curve.csv plus one
// curve-<metric>.csv per metric into the sweep directory.
std::vector<CurvePoint> cmd_sweep(const RunConfig& config, std::ostream* log = nullptr,
                                  std::filesystem::path* sweep_dir = nullptr);

std::string curve_csv(const std::vector<CurvePoint>& points);

}  // namespace fairgraph
