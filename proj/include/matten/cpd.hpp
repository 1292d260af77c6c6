// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "matten/matrix.hpp"
#include "matten/sptensor.hpp"
#include "matten/training.hpp"

namespace matten {

/// CP completion hyperparameters. A positive smooth_lambda turns plain CPD
/// into the smoothness-regularized variant.
struct CPTrainConfig {
  std::size_t rank = 8;
  double learning_rate = 1e-2;
  std::size_t epochs = 200;
  std::size_t batch_size = 256;
  double l2 = 1e-4;
  double smooth_lambda = 0.0;
  std::optional<std::vector<std::size_t>> ordinal_modes;  ///< default: count modes
  std::optional<double> init_scale;                       ///< default: see resolved_init_scale
  std::optional<std::size_t> patience;
  std::uint64_t seed = 0;

  /// Default a = sqrt(3) * (0.1 / rank)^(1 / (2 * order)), which gives raw
  /// predictions of variance 0.1 at initialization.
  double resolved_init_scale(std::size_t order) const;
  std::vector<std::size_t> resolved_ordinal_modes(const Shape& shape) const;
  /// Throws ConfigError; checks ordinal modes against `shape` when given.
  void validate(const Shape* shape = nullptr) const;
};

/// One factor matrix (extent x rank) per mode plus target statistics.
class CPModel {
 public:
  CPModel() = default;
  CPModel(Shape shape, std::vector<Matrix> factors);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t order() const noexcept { return shape_.order(); }
  std::size_t rank() const noexcept { return factors_.empty() ? 0 : factors_[0].cols(); }

  const std::vector<Matrix>& factors() const noexcept { return factors_; }
  std::vector<Matrix>& mutable_factors() noexcept { return factors_; }

  bool stats_bound() const noexcept { return stats_.has_value(); }
  /// Throws StateError before training binds the statistics.
  const ValueStats& stats() const;
  void bind_stats(ValueStats stats) { stats_ = stats; }

  std::vector<std::span<const double>> parameter_blocks() const;

  bool operator==(const CPModel&) const = default;

 private:
  Shape shape_;
  std::vector<Matrix> factors_;
  std::optional<ValueStats> stats_;
};

/// Factors drawn i.i.d. from U(-init_scale, +init_scale) with Rng(seed).
CPModel init_model(const Shape& shape, const CPTrainConfig& config);

/// sum_r prod_n factor[n](coord[n], r), on the standardized scale.
double predict_raw(const CPModel& model, CoordView coord);

/// mean + std * predict_raw.
double predict(const CPModel& model, CoordView coord);

/// sum over ordinal modes of sum_i |row(i+1) - row(i)|^2.
double smoothness_penalty(const CPModel& model, std::span<const std::size_t> ordinal_modes);

/// Training objective over `entries` of `data` (targets standardized with
/// the model's bound statistics):
///   mean_e (predict_raw - y_std)^2 + l2 |factors|^2 + smooth_lambda * penalty
/// Fills `gradient` (one matrix per mode) when non-null.
double cp_objective(const CPModel& model, const SparseTensor& data,
                    std::span<const std::size_t> entries, const CPTrainConfig& config,
                    std::vector<Matrix>* gradient);

struct CPTrainResult {
  CPModel model;
  TrainReport report;
};

/// Binds statistics from `data`, then runs minibatch Adam (0.9, 0.999, 1e-8).
/// Requires distinct coordinates. With `patience` and a validation set the
/// best epoch's factors are restored.
CPTrainResult cp_train(CPModel model, const SparseTensor& data, const CPTrainConfig& config,
                       const SparseTensor* validation = nullptr);

}  // namespace matten
