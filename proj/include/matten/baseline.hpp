// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "matten/neural.hpp"
#include "matten/sptensor.hpp"
#include "matten/training.hpp"

namespace matten {

/// Concatenated per-mode one-hot features for a coordinate.
class OneHotEncoder {
 public:
  OneHotEncoder() = default;
  explicit OneHotEncoder(Shape shape);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t total_width() const noexcept { return total_width_; }

  /// Dense feature vector with exactly order() ones. Throws BoundsError.
  std::vector<double> encode(CoordView coord) const;
  /// Positions of the ones, one per mode, in mode order.
  void hot_indices(CoordView coord, std::vector<std::size_t>& out) const;

 private:
  Shape shape_;
  std::vector<std::size_t> offsets_;
  std::size_t total_width_ = 0;
};

struct MLPTrainConfig {
  std::vector<std::size_t> hidden{64, 64};
  double learning_rate = 1e-3;
  std::size_t epochs = 200;
  std::size_t batch_size = 256;
  double l2 = 1e-4;  ///< on weights, not biases
  std::optional<std::size_t> patience;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Non-tensor baseline: a relu MLP over one-hot coordinate features.
struct MLPRegressor {
  OneHotEncoder encoder;
  DenseNet net;
  std::optional<ValueStats> stats;

  const ValueStats& bound_stats() const;
};

MLPRegressor init_mlp(const Shape& shape, const MLPTrainConfig& config);

double mlp_predict_raw(const MLPRegressor& model, CoordView coord);
double mlp_predict(const MLPRegressor& model, CoordView coord);

/// mean_e (raw - y_std)^2 + l2 |weights|^2.
double mlp_objective(const MLPRegressor& model, const SparseTensor& data,
                     std::span<const std::size_t> entries, double l2, NetGrads* gradient);

struct MLPTrainResult {
  MLPRegressor model;
  TrainReport report;
};

MLPTrainResult mlp_train(MLPRegressor model, const SparseTensor& data,
                         const MLPTrainConfig& config,
                         const SparseTensor* validation = nullptr);

/// Initializes from `config.seed` and trains.
MLPTrainResult mlp_train(const SparseTensor& data, const MLPTrainConfig& config,
                         const SparseTensor* validation = nullptr);

}  // namespace matten
