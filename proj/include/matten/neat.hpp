// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "matten/matrix.hpp"
#include "matten/neural.hpp"
#include "matten/sptensor.hpp"
#include "matten/training.hpp"

namespace matten {

struct NeatTrainConfig {
  std::size_t components = 8;
  std::size_t embed_dim = 4;
  std::size_t hidden = 16;
  double learning_rate = 1e-3;
  std::size_t epochs = 300;
  std::size_t batch_size = 256;
  double l2 = 1e-4;             ///< on embeddings and weights, not biases
  double init_scale = 0.5;      ///< embeddings ~ U(-init_scale, +init_scale)
  std::optional<std::size_t> patience;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Neural additive tensor model. Component r owns one embedding table per
/// mode and a one-hidden-layer relu net over the concatenation of the rows
/// selected by a coordinate; the standardized prediction is the sum of the
/// component outputs.
class NeatModel {
 public:
  NeatModel() = default;
  /// embeddings[r][n] is extent_n x d; nets[r] maps N*d inputs to 1 output.
  NeatModel(Shape shape, std::vector<std::vector<Matrix>> embeddings,
            std::vector<DenseNet> nets);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t order() const noexcept { return shape_.order(); }
  std::size_t components() const noexcept { return nets_.size(); }
  std::size_t embed_dim() const noexcept { return embeddings_.at(0).at(0).cols(); }
  std::size_t hidden() const;

  const Matrix& embedding(std::size_t component, std::size_t mode) const {
    return embeddings_.at(component).at(mode);
  }
  Matrix& mutable_embedding(std::size_t component, std::size_t mode) {
    return embeddings_.at(component).at(mode);
  }
  const DenseNet& net(std::size_t component) const { return nets_.at(component); }
  DenseNet& mutable_net(std::size_t component) { return nets_.at(component); }

  bool stats_bound() const noexcept { return stats_.has_value(); }
  const ValueStats& stats() const;
  void bind_stats(ValueStats stats) { stats_ = stats; }

  /// Component by component: embeddings in mode order, then net parameters.
  std::vector<std::span<double>> parameter_blocks();
  std::vector<std::span<const double>> parameter_blocks() const;

 private:
  Shape shape_;
  std::vector<std::vector<Matrix>> embeddings_;
  std::vector<DenseNet> nets_;
  std::optional<ValueStats> stats_;
};

NeatModel init_neat(const Shape& shape, const NeatTrainConfig& config);

/// Output of one component on the standardized scale.
double neat_component(const NeatModel& model, std::size_t component, CoordView coord);

/// Sum of component outputs (standardized scale).
double neat_predict_raw(const NeatModel& model, CoordView coord);

/// mean + std * neat_predict_raw. Throws StateError before training.
double neat_predict(const NeatModel& model, CoordView coord);

/// Gradient buffers mirroring NeatModel::parameter_blocks().
struct NeatGrads {
  std::vector<std::vector<Matrix>> embeddings;
  std::vector<NetGrads> nets;

  static NeatGrads zeros_like(const NeatModel& model);
  void clear();
  std::vector<std::span<const double>> views() const;
};

/// mean_e (raw - y_std)^2 + l2 (|embeddings|^2 + |weights|^2).
double neat_objective(const NeatModel& model, const SparseTensor& data,
                      std::span<const std::size_t> entries, double l2, NeatGrads* gradient);

struct NeatTrainResult {
  NeatModel model;
  TrainReport report;
};

NeatTrainResult neat_train(NeatModel model, const SparseTensor& data,
                           const NeatTrainConfig& config,
                           const SparseTensor* validation = nullptr);

}  // namespace matten
