// SPDX-License-Identifier: Apache-2.0
#include "matten/baseline.hpp"

#include <algorithm>

#include "matten/error.hpp"

namespace matten {

OneHotEncoder::OneHotEncoder(Shape shape) : shape_(std::move(shape)) {
  for (auto extent : shape_.dims) {
    offsets_.push_back(total_width_);
    total_width_ += extent;
  }
}

void OneHotEncoder::hot_indices(CoordView coord, std::vector<std::size_t>& out) const {
  if (coord.size() != shape_.order()) throw ShapeError("coordinate order mismatch");
  out.resize(coord.size());
  for (std::size_t n = 0; n < coord.size(); ++n) {
    if (coord[n] >= shape_.dims[n]) throw BoundsError(n, coord[n], shape_.dims[n]);
    out[n] = offsets_[n] + coord[n];
  }
}

std::vector<double> OneHotEncoder::encode(CoordView coord) const {
  std::vector<std::size_t> hot;
  hot_indices(coord, hot);
  std::vector<double> x(total_width_, 0.0);
  for (auto h : hot) x[h] = 1.0;
  return x;
}

void MLPTrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (!(l2 >= 0.0)) throw ConfigError("l2 must be non-negative");
  if (patience && *patience == 0) throw ConfigError("patience must be positive");
  for (auto h : hidden) {
    if (h == 0) throw ConfigError("hidden widths must be positive");
  }
}

const ValueStats& MLPRegressor::bound_stats() const {
  if (!stats) throw StateError("value statistics are not bound; train the model first");
  return *stats;
}

MLPRegressor init_mlp(const Shape& shape, const MLPTrainConfig& config) {
  config.validate();
  OneHotEncoder encoder(shape);
  std::vector<std::size_t> widths{encoder.total_width()};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(1);
  Rng rng(config.seed);
  return {std::move(encoder), DenseNet::glorot(widths, rng), std::nullopt};
}

double mlp_predict_raw(const MLPRegressor& model, CoordView coord) {
  std::vector<std::size_t> hot;
  model.encoder.hot_indices(coord, hot);
  Tape tape;
  return forward_one_hot(model.net, hot, tape)[0];
}

double mlp_predict(const MLPRegressor& model, CoordView coord) {
  const auto& stats = model.bound_stats();
  return stats.mean + stats.std * mlp_predict_raw(model, coord);
}

double mlp_objective(const MLPRegressor& model, const SparseTensor& data,
                     std::span<const std::size_t> entries, double l2, NetGrads* gradient) {
  const auto& stats = model.bound_stats();
  if (gradient) gradient->clear();
  Tape tape;
  std::vector<std::size_t> hot;
  double data_loss = 0.0;
  const double inv_batch = entries.empty() ? 0.0 : 1.0 / static_cast<double>(entries.size());
  for (auto e : entries) {
    model.encoder.hot_indices(data.coord(e), hot);
    const double raw = forward_one_hot(model.net, hot, tape)[0];
    const double residual = raw - (data.value(e) - stats.mean) / stats.std;
    data_loss += residual * residual;
    if (gradient) {
      const double upstream = 2.0 * residual * inv_batch;
      accumulate_backward(model.net, tape, std::span(&upstream, 1), *gradient);
    }
  }
  double objective = data_loss * inv_batch;
  if (l2 > 0.0) {
    double norm = 0.0;
    const auto& layers = model.net.layers();
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const auto w = layers[k].weights.values();
      for (double v : w) norm += v * v;
      if (gradient) {
        auto g = gradient->weights[k].values();
        for (std::size_t i = 0; i < w.size(); ++i) g[i] += 2.0 * l2 * w[i];
      }
    }
    objective += l2 * norm;
  }
  return objective;
}

MLPTrainResult mlp_train(MLPRegressor model, const SparseTensor& data,
                         const MLPTrainConfig& config, const SparseTensor* validation) {
  config.validate();
  if (data.empty()) throw DatasetError("training tensor is empty");
  if (data.shape().dims != model.encoder.shape().dims) {
    throw ShapeError("training tensor shape does not match the model");
  }
  if (validation && validation->shape().dims != model.encoder.shape().dims) {
    throw ShapeError("validation tensor shape does not match the model");
  }
  if (data.has_duplicates()) throw StateError("training tensor has duplicate coordinates");

  model.stats = value_stats(data.values());

  const auto params = model.net.parameters();
  AdamState adam = make_adam_state(params, {config.learning_rate, 0.9, 0.999, 1e-8});
  NetGrads gradient = NetGrads::zeros_like(model.net);
  std::vector<std::vector<double>> best;

  LoopHooks hooks;
  hooks.step = [&](std::span<const std::size_t> batch) {
    const double loss = mlp_objective(model, data, batch, config.l2, &gradient);
    const auto views = gradient.views();
    adam_step(params, views, adam);
    return loss;
  };
  if (validation && !validation->empty()) {
    hooks.validate = [&] {
      return tensor_mae(*validation, [&](CoordView c) { return mlp_predict(model, c); });
    };
    hooks.save_best = [&] {
      best.clear();
      for (auto p : params) best.emplace_back(p.begin(), p.end());
    };
    hooks.restore_best = [&] {
      for (std::size_t b = 0; b < params.size(); ++b) {
        std::copy(best[b].begin(), best[b].end(), params[b].begin());
      }
    };
  }

  LoopConfig loop{config.epochs, config.batch_size, config.learning_rate, config.patience,
                  config.seed};
  TrainReport report = run_training_loop(data.nnz(), loop, hooks);
  const DenseNet& trained = model.net;
  report.snapshot_id = parameter_fingerprint(trained.parameters());
  return {std::move(model), std::move(report)};
}

MLPTrainResult mlp_train(const SparseTensor& data, const MLPTrainConfig& config,
                         const SparseTensor* validation) {
  return mlp_train(init_mlp(data.shape(), config), data, config, validation);
}

}  // namespace matten
