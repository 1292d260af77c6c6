// SPDX-License-Identifier: Apache-2.0
#include "matten/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "matten/error.hpp"
#include "matten/rng.hpp"
#include "matten/tensorize.hpp"

namespace matten {

double mae(std::span<const std::pair<double, double>> pairs) {
  if (pairs.empty()) throw ArgumentError("mae of an empty set of pairs");
  double sum = 0.0;
  for (const auto& [y, yhat] : pairs) sum += std::abs(y - yhat);
  return sum / static_cast<double>(pairs.size());
}

Metrics metrics(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw ArgumentError("metric inputs differ in length");
  if (actual.empty()) throw ArgumentError("metrics of an empty set of pairs");
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double r = actual[i] - predicted[i];
    abs_sum += std::abs(r);
    sq_sum += r * r;
  }
  const double n = static_cast<double>(actual.size());
  return {abs_sum / n, std::sqrt(sq_sum / n), actual.size()};
}

Metrics evaluate(const Predictor& predictor, const SparseTensor& test) {
  std::vector<double> predicted(test.nnz());
  for (std::size_t e = 0; e < test.nnz(); ++e) predicted[e] = predictor.predict(test.coord(e));
  return metrics(test.values(), predicted);
}

void ExperimentConfig::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (train_count < 1) throw ConfigError("train_count must be positive");
}

Trainer model_trainer(const ModelSpec& spec) {
  spec.validate();
  return [spec](const SparseTensor& train, std::uint64_t seed) {
    FitResult fit = [&] {
      if (!spec.patience()) return fit_model(spec, train, seed);
      const auto n = train.nnz();
      const auto held_out = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(spec.validation_fraction * n)));
      if (held_out >= n) {
        throw ConfigError("too few training entries to hold out a validation set");
      }
      const auto parts = split(train, n - held_out, seed + kValidationStream);
      return fit_model(spec, parts.train, seed, &parts.test);
    }();
    TrainedPredictor out;
    out.seconds = fit.report.seconds;
    out.snapshot_id = fit.report.snapshot_id;
    out.predictor = std::make_shared<TrainedModel>(std::move(fit.model));
    return out;
  };
}

std::vector<double> ResultRow::mae_values() const {
  std::vector<double> out;
  for (const auto& it : iterations) out.push_back(it.test.mae);
  return out;
}

std::vector<std::uint64_t> ResultRow::seeds() const {
  std::vector<std::uint64_t> out;
  for (const auto& it : iterations) out.push_back(it.seed);
  return out;
}

namespace {

void check_disjoint(const TrainTestSplit& parts) {
  std::unordered_set<Coord, CoordHash> seen;
  seen.reserve(parts.train.nnz());
  for (std::size_t e = 0; e < parts.train.nnz(); ++e) {
    const auto c = parts.train.coord(e);
    seen.emplace(c.begin(), c.end());
  }
  for (std::size_t e = 0; e < parts.test.nnz(); ++e) {
    const auto c = parts.test.coord(e);
    if (seen.count(Coord(c.begin(), c.end()))) {
      throw StateError("a training coordinate appears in the test split");
    }
  }
}

void summarize(ResultRow& row) {
  const double n = static_cast<double>(row.iterations.size());
  double mae_sum = 0.0, rmse_sum = 0.0, sec_sum = 0.0;
  for (const auto& it : row.iterations) {
    mae_sum += it.test.mae;
    rmse_sum += it.test.rmse;
    sec_sum += it.seconds;
  }
  row.mean_mae = mae_sum / n;
  row.mean_rmse = rmse_sum / n;
  row.mean_seconds = sec_sum / n;
  row.std_mae = 0.0;
  if (row.iterations.size() > 1) {
    double ss = 0.0;
    for (const auto& it : row.iterations) ss += (it.test.mae - row.mean_mae) * (it.test.mae - row.mean_mae);
    row.std_mae = std::sqrt(ss / (n - 1.0));
  }
}

}  // namespace

ResultRow run_experiment(const std::string& model, const SparseTensor& data,
                         const ExperimentConfig& config, const Trainer& trainer,
                         const IterationObserver& observer) {
  config.validate();
  auto [clean, dedup_report] = dedup(data, config.dedup_policy);
  if (config.train_count >= clean.nnz()) {
    throw ConfigError("train_count " + std::to_string(config.train_count) +
                      " leaves no test entries (" + std::to_string(clean.nnz()) +
                      " distinct entries)");
  }

  ResultRow row;
  row.model = model;
  row.dedup = dedup_report;
  row.train_count = config.train_count;
  row.test_count = clean.nnz() - config.train_count;
  for (std::size_t i = 0; i < config.iterations; ++i) {
    const std::uint64_t seed = config.base_seed + i;
    try {
      const auto parts = split(clean, config.train_count, seed);
      check_disjoint(parts);
      const auto trained = trainer(parts.train, seed);
      IterationResult it;
      it.iteration = i;
      it.seed = seed;
      it.test = evaluate(*trained.predictor, parts.test);
      it.seconds = trained.seconds;
      it.snapshot_id = trained.snapshot_id;
      if (observer) observer(it, parts, *trained.predictor);
      row.iterations.push_back(std::move(it));
    } catch (Error& e) {
      e.add_context("iteration " + std::to_string(i) + ": ");
      throw;
    }
  }
  summarize(row);
  return row;
}

ResultRow run_experiment(const ModelSpec& spec, const SparseTensor& data,
                         const ExperimentConfig& config, const IterationObserver& observer) {
  return run_experiment(to_string(spec.kind), data, config, model_trainer(spec), observer);
}

std::vector<SamplePrediction> sample_predictions(const Predictor& predictor,
                                                 const SparseTensor& test, std::size_t k,
                                                 std::uint64_t seed) {
  if (k == 0 || k > test.nnz()) {
    throw ArgumentError("sample size " + std::to_string(k) + " must lie in [1, " +
                        std::to_string(test.nnz()) + "]");
  }
  std::vector<std::size_t> order(test.nnz());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<SamplePrediction> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto e = order[i];
    const auto c = test.coord(e);
    SamplePrediction s;
    s.label = describe_coordinate(c, test.shape(), test.index_map());
    s.coord.assign(c.begin(), c.end());
    s.actual = test.value(e);
    s.predicted = predictor.predict(c);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SweepRow> efficiency_sweep(const std::string& model, const SparseTensor& data,
                                       const ExperimentConfig& config,
                                       std::vector<std::size_t> sizes, const Trainer& trainer) {
  if (sizes.empty()) throw ConfigError("sweep needs at least one train size");
  std::sort(sizes.begin(), sizes.end());
  if (std::adjacent_find(sizes.begin(), sizes.end()) != sizes.end()) {
    throw ConfigError("sweep sizes must be distinct");
  }
  std::vector<SweepRow> rows;
  for (auto size : sizes) {
    ExperimentConfig at = config;
    at.train_count = size;
    rows.push_back({size, run_experiment(model, data, at, trainer)});
  }
  return rows;
}

std::vector<SweepRow> efficiency_sweep(const ModelSpec& spec, const SparseTensor& data,
                                       const ExperimentConfig& config,
                                       std::vector<std::size_t> sizes) {
  return efficiency_sweep(to_string(spec.kind), data, config, std::move(sizes),
                          model_trainer(spec));
}

}  // namespace matten
