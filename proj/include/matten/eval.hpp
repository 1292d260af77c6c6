// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "matten/model.hpp"
#include "matten/sptensor.hpp"

namespace matten {

struct Metrics {
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t count = 0;
};

/// (1/n) sum |y - yhat| over (y, yhat) pairs. Throws ArgumentError when empty.
double mae(std::span<const std::pair<double, double>> pairs);

/// Throws ArgumentError when empty or when the lengths differ.
Metrics metrics(std::span<const double> actual, std::span<const double> predicted);

/// Metrics of `predictor` over every entry of `test`.
Metrics evaluate(const Predictor& predictor, const SparseTensor& test);

struct ExperimentConfig {
  std::size_t train_count = 0;
  std::size_t iterations = 5;
  std::uint64_t base_seed = 0;
  DedupPolicy dedup_policy = DedupPolicy::mean;

  /// Throws ConfigError.
  void validate() const;
};

/// What a trainer hands back for one iteration.
struct TrainedPredictor {
  std::shared_ptr<const Predictor> predictor;
  double seconds = 0.0;  ///< training only
  std::string snapshot_id;
};

using Trainer = std::function<TrainedPredictor(const SparseTensor& train, std::uint64_t seed)>;

/// Seed offset for the early-stopping holdout drawn from the training half.
inline constexpr std::uint64_t kValidationStream = 0xD1B54A32D192ED03ULL;

/// Trains `spec` through fit_model. When the spec sets a patience, a
/// validation_fraction share of the training entries (at least one) is held
/// out with split(train, n - held_out, seed + kValidationStream).
Trainer model_trainer(const ModelSpec& spec);

struct IterationResult {
  std::size_t iteration = 0;
  std::uint64_t seed = 0;
  Metrics test;
  double seconds = 0.0;
  std::string snapshot_id;
};

struct ResultRow {
  std::string model;
  std::vector<IterationResult> iterations;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  DedupReport dedup;
  double mean_mae = 0.0;
  double std_mae = 0.0;  ///< sample standard deviation, 0 for one iteration
  double mean_rmse = 0.0;
  double mean_seconds = 0.0;

  std::vector<double> mae_values() const;
  std::vector<std::uint64_t> seeds() const;
};

/// Called after each iteration with the split it used and the trained model.
using IterationObserver = std::function<void(const IterationResult&, const TrainTestSplit&,
                                             const Predictor&)>;

/// Deduplicates `data`, then for i in [0, iterations): splits and trains
/// with seed base_seed + i and scores the test half. Throws StateError if a
/// training coordinate ever appears in the test half. Errors raised inside
/// an iteration carry an "iteration i: " prefix.
ResultRow run_experiment(const std::string& model, const SparseTensor& data,
                         const ExperimentConfig& config, const Trainer& trainer,
                         const IterationObserver& observer = {});

ResultRow run_experiment(const ModelSpec& spec, const SparseTensor& data,
                         const ExperimentConfig& config,
                         const IterationObserver& observer = {});

struct SamplePrediction {
  std::string label;  ///< formula or joined labels
  Coord coord;
  double actual = 0.0;
  double predicted = 0.0;
};

/// `k` test entries drawn without replacement: the first k of a seeded
/// Fisher-Yates permutation of the entry order. Throws ArgumentError unless
/// 0 < k <= nnz.
std::vector<SamplePrediction> sample_predictions(const Predictor& predictor,
                                                 const SparseTensor& test, std::size_t k,
                                                 std::uint64_t seed);

struct SweepRow {
  std::size_t size = 0;
  ResultRow result;
};

/// run_experiment once per size (ascending), all with the same base seed.
/// Sizes must be distinct, positive and below the deduplicated entry count.
std::vector<SweepRow> efficiency_sweep(const std::string& model, const SparseTensor& data,
                                       const ExperimentConfig& config,
                                       std::vector<std::size_t> sizes, const Trainer& trainer);

std::vector<SweepRow> efficiency_sweep(const ModelSpec& spec, const SparseTensor& data,
                                       const ExperimentConfig& config,
                                       std::vector<std::size_t> sizes);

}  // namespace matten
