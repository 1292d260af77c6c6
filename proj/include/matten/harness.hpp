// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "matten/config.hpp"
#include "matten/eval.hpp"

namespace matten {

struct LoadedDataset {
  SparseTensor tensor;
  std::optional<SkipReport> skips;  ///< set when the source was a CSV
  std::string source;               ///< path, or "synthetic"
};

/// A `.csv` dataset is tensorized with the run's tensorize config, any other
/// path is read as a tensor file, and `synthetic` is generated.
LoadedDataset load_dataset(const RunConfig& config);

using ProgressFn = std::function<void(const std::string&)>;

struct ModelSamples {
  std::string model;
  std::vector<SamplePrediction> samples;
};

struct BenchmarkResult {
  std::vector<ResultRow> rows;
  std::vector<ModelSamples> samples;  ///< drawn from iteration 0 with base_seed
  Json report;
  std::vector<std::string> files;
};

/// Runs every configured model and writes results.csv, samples.csv and
/// report.json into output_dir. Requires train_count > 0.
BenchmarkResult run_benchmark(const RunConfig& config, const ProgressFn& progress = {});

struct ModelSweep {
  std::string model;
  std::vector<SweepRow> rows;
};

struct SweepResult {
  std::vector<ModelSweep> models;
  std::vector<std::string> files;
};

/// Runs efficiency_sweep for every configured model over sweep_sizes and
/// writes sweep.csv into output_dir.
SweepResult run_sweep(const RunConfig& config, const ProgressFn& progress = {});

// CSV renderers. Every file starts with "# resolved-config: <json>"; the
// last column of results.csv and sweep.csv is the training time, the only
// field that varies between identical runs.
std::string results_csv(const RunConfig& config, const std::vector<ResultRow>& rows);
std::string samples_csv(const RunConfig& config, const std::vector<ModelSamples>& samples);
std::string sweep_csv(const RunConfig& config, const std::vector<ModelSweep>& sweeps);

Json to_json(const ResultRow& row);

}  // namespace matten
