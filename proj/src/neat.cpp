// SPDX-License-Identifier: Apache-2.0
#include "matten/neat.hpp"

#include <algorithm>
#include <array>

#include "matten/error.hpp"

namespace matten {

void NeatTrainConfig::validate() const {
  if (components < 1) throw ConfigError("components must be at least 1");
  if (embed_dim < 1) throw ConfigError("embed_dim must be at least 1");
  if (hidden < 1) throw ConfigError("hidden must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (!(l2 >= 0.0)) throw ConfigError("l2 must be non-negative");
  if (!(init_scale >= 0.0)) throw ConfigError("init_scale must be non-negative");
  if (patience && *patience == 0) throw ConfigError("patience must be positive");
}

NeatModel::NeatModel(Shape shape, std::vector<std::vector<Matrix>> embeddings,
                     std::vector<DenseNet> nets)
    : shape_(std::move(shape)), embeddings_(std::move(embeddings)), nets_(std::move(nets)) {
  if (nets_.empty() || embeddings_.size() != nets_.size()) {
    throw ShapeError("need one embedding set per component net");
  }
  const std::size_t d = embeddings_[0].empty() ? 0 : embeddings_[0][0].cols();
  if (d == 0) throw ShapeError("embedding dimension must be positive");
  for (std::size_t r = 0; r < nets_.size(); ++r) {
    if (embeddings_[r].size() != shape_.order()) throw ShapeError("one embedding per mode");
    for (std::size_t n = 0; n < shape_.order(); ++n) {
      if (embeddings_[r][n].rows() != shape_.dims[n] || embeddings_[r][n].cols() != d) {
        throw ShapeError("embedding (" + std::to_string(r) + ", " + std::to_string(n) +
                         ") has the wrong dimensions");
      }
    }
    if (nets_[r].input_width() != shape_.order() * d || nets_[r].output_width() != 1) {
      throw ShapeError("component net " + std::to_string(r) + " has the wrong widths");
    }
  }
}

std::size_t NeatModel::hidden() const {
  const auto& layers = nets_.at(0).layers();
  return layers.size() > 1 ? layers.front().out() : 0;
}

const ValueStats& NeatModel::stats() const {
  if (!stats_) throw StateError("value statistics are not bound; train the model first");
  return *stats_;
}

std::vector<std::span<double>> NeatModel::parameter_blocks() {
  std::vector<std::span<double>> blocks;
  for (std::size_t r = 0; r < nets_.size(); ++r) {
    for (auto& e : embeddings_[r]) blocks.emplace_back(e.values());
    for (auto p : nets_[r].parameters()) blocks.push_back(p);
  }
  return blocks;
}

std::vector<std::span<const double>> NeatModel::parameter_blocks() const {
  std::vector<std::span<const double>> blocks;
  for (std::size_t r = 0; r < nets_.size(); ++r) {
    for (const auto& e : embeddings_[r]) blocks.emplace_back(e.values());
    const DenseNet& net = nets_[r];
    for (auto p : net.parameters()) blocks.push_back(p);
  }
  return blocks;
}

NeatModel init_neat(const Shape& shape, const NeatTrainConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const std::size_t d = config.embed_dim;
  std::vector<std::vector<Matrix>> embeddings(config.components);
  for (auto& per_mode : embeddings) {
    for (auto extent : shape.dims) {
      Matrix e(extent, d);
      for (auto& v : e.values()) {
        v = config.init_scale == 0.0 ? 0.0 : rng.uniform(-config.init_scale, config.init_scale);
      }
      per_mode.push_back(std::move(e));
    }
  }
  const std::array<std::size_t, 3> widths{shape.order() * d, config.hidden, 1};
  std::vector<DenseNet> nets;
  for (std::size_t r = 0; r < config.components; ++r) nets.push_back(DenseNet::glorot(widths, rng));
  return NeatModel(shape, std::move(embeddings), std::move(nets));
}

namespace {

void check_coord(const Shape& shape, CoordView coord) {
  if (coord.size() != shape.order()) throw ShapeError("coordinate order mismatch");
  for (std::size_t n = 0; n < coord.size(); ++n) {
    if (coord[n] >= shape.dims[n]) throw BoundsError(n, coord[n], shape.dims[n]);
  }
}

void gather(const NeatModel& model, std::size_t r, CoordView coord, std::vector<double>& x) {
  const std::size_t d = model.embed_dim();
  x.resize(model.order() * d);
  for (std::size_t n = 0; n < model.order(); ++n) {
    const auto row = model.embedding(r, n).row(coord[n]);
    std::copy(row.begin(), row.end(), x.begin() + static_cast<std::ptrdiff_t>(n * d));
  }
}

}  // namespace

double neat_component(const NeatModel& model, std::size_t component, CoordView coord) {
  check_coord(model.shape(), coord);
  std::vector<double> x;
  gather(model, component, coord, x);
  Tape tape;
  return forward(model.net(component), x, tape)[0];
}

double neat_predict_raw(const NeatModel& model, CoordView coord) {
  double total = 0.0;
  for (std::size_t r = 0; r < model.components(); ++r) total += neat_component(model, r, coord);
  return total;
}

double neat_predict(const NeatModel& model, CoordView coord) {
  const auto& stats = model.stats();
  return stats.mean + stats.std * neat_predict_raw(model, coord);
}

NeatGrads NeatGrads::zeros_like(const NeatModel& model) {
  NeatGrads g;
  g.embeddings.resize(model.components());
  for (std::size_t r = 0; r < model.components(); ++r) {
    for (std::size_t n = 0; n < model.order(); ++n) {
      const auto& e = model.embedding(r, n);
      g.embeddings[r].emplace_back(e.rows(), e.cols());
    }
    g.nets.push_back(NetGrads::zeros_like(model.net(r)));
  }
  return g;
}

void NeatGrads::clear() {
  for (auto& per_mode : embeddings) {
    for (auto& e : per_mode) std::fill(e.values().begin(), e.values().end(), 0.0);
  }
  for (auto& n : nets) n.clear();
}

std::vector<std::span<const double>> NeatGrads::views() const {
  std::vector<std::span<const double>> out;
  for (std::size_t r = 0; r < nets.size(); ++r) {
    for (const auto& e : embeddings[r]) out.emplace_back(e.values());
    for (auto v : nets[r].views()) out.push_back(v);
  }
  return out;
}

double neat_objective(const NeatModel& model, const SparseTensor& data,
                      std::span<const std::size_t> entries, double l2, NeatGrads* gradient) {
  const auto& stats = model.stats();
  const std::size_t components = model.components();
  const std::size_t d = model.embed_dim();
  if (gradient) gradient->clear();

  std::vector<Tape> tapes(components);
  std::vector<double> x;
  double data_loss = 0.0;
  const double inv_batch = entries.empty() ? 0.0 : 1.0 / static_cast<double>(entries.size());
  for (auto e : entries) {
    const auto coord = data.coord(e);
    double raw = 0.0;
    for (std::size_t r = 0; r < components; ++r) {
      gather(model, r, coord, x);
      raw += forward(model.net(r), x, tapes[r])[0];
    }
    const double residual = raw - (data.value(e) - stats.mean) / stats.std;
    data_loss += residual * residual;
    if (!gradient) continue;
    const double upstream = 2.0 * residual * inv_batch;
    for (std::size_t r = 0; r < components; ++r) {
      const auto input_grad =
          accumulate_backward(model.net(r), tapes[r], std::span(&upstream, 1), gradient->nets[r]);
      for (std::size_t n = 0; n < model.order(); ++n) {
        auto row = gradient->embeddings[r][n].row(coord[n]);
        for (std::size_t k = 0; k < d; ++k) row[k] += input_grad[n * d + k];
      }
    }
  }
  double objective = data_loss * inv_batch;

  if (l2 > 0.0) {
    double norm = 0.0;
    for (std::size_t r = 0; r < components; ++r) {
      for (std::size_t n = 0; n < model.order(); ++n) {
        const auto values = model.embedding(r, n).values();
        for (double v : values) norm += v * v;
        if (gradient) {
          auto g = gradient->embeddings[r][n].values();
          for (std::size_t i = 0; i < values.size(); ++i) g[i] += 2.0 * l2 * values[i];
        }
      }
      const auto& layers = model.net(r).layers();
      for (std::size_t k = 0; k < layers.size(); ++k) {
        const auto w = layers[k].weights.values();
        for (double v : w) norm += v * v;
        if (gradient) {
          auto g = gradient->nets[r].weights[k].values();
          for (std::size_t i = 0; i < w.size(); ++i) g[i] += 2.0 * l2 * w[i];
        }
      }
    }
    objective += l2 * norm;
  }
  return objective;
}

NeatTrainResult neat_train(NeatModel model, const SparseTensor& data,
                           const NeatTrainConfig& config, const SparseTensor* validation) {
  config.validate();
  if (data.empty()) throw DatasetError("training tensor is empty");
  if (data.shape().dims != model.shape().dims) {
    throw ShapeError("training tensor shape does not match the model");
  }
  if (validation && validation->shape().dims != model.shape().dims) {
    throw ShapeError("validation tensor shape does not match the model");
  }
  if (data.has_duplicates()) throw StateError("training tensor has duplicate coordinates");

  model.bind_stats(value_stats(data.values()));

  const auto params = model.parameter_blocks();
  AdamState adam = make_adam_state(params, {config.learning_rate, 0.9, 0.999, 1e-8});
  NeatGrads gradient = NeatGrads::zeros_like(model);
  std::vector<std::vector<double>> best;

  LoopHooks hooks;
  hooks.step = [&](std::span<const std::size_t> batch) {
    const double loss = neat_objective(model, data, batch, config.l2, &gradient);
    const auto views = gradient.views();
    adam_step(params, views, adam);
    return loss;
  };
  if (validation && !validation->empty()) {
    hooks.validate = [&] {
      return tensor_mae(*validation, [&](CoordView c) { return neat_predict(model, c); });
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
  const NeatModel& trained = model;
  report.snapshot_id = parameter_fingerprint(trained.parameter_blocks());
  return {std::move(model), std::move(report)};
}

}  // namespace matten
