// SPDX-License-Identifier: Apache-2.0
#include "matten/cpd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "matten/error.hpp"
#include "matten/neural.hpp"
#include "matten/rng.hpp"

namespace matten {

double CPTrainConfig::resolved_init_scale(std::size_t order) const {
  if (init_scale) return *init_scale;
  const double r = static_cast<double>(rank);
  return std::sqrt(3.0) * std::pow(0.1 / r, 1.0 / (2.0 * static_cast<double>(order)));
}

std::vector<std::size_t> CPTrainConfig::resolved_ordinal_modes(const Shape& shape) const {
  if (ordinal_modes) return *ordinal_modes;
  std::vector<std::size_t> modes;
  for (std::size_t n = 0; n < shape.order(); ++n) {
    if (shape.kinds[n] == ModeKind::count) modes.push_back(n);
  }
  return modes;
}

void CPTrainConfig::validate(const Shape* shape) const {
  if (rank < 1) throw ConfigError("rank must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (!(l2 >= 0.0)) throw ConfigError("l2 must be non-negative");
  if (!(smooth_lambda >= 0.0)) throw ConfigError("smooth_lambda must be non-negative");
  if (init_scale && !(*init_scale >= 0.0)) throw ConfigError("init_scale must be non-negative");
  if (patience && *patience == 0) throw ConfigError("patience must be positive");
  if (shape && ordinal_modes) {
    for (auto n : *ordinal_modes) {
      if (n >= shape->order()) {
        throw ConfigError("ordinal mode " + std::to_string(n) + " is not a tensor mode");
      }
    }
  }
}

CPModel::CPModel(Shape shape, std::vector<Matrix> factors)
    : shape_(std::move(shape)), factors_(std::move(factors)) {
  if (factors_.size() != shape_.order()) throw ShapeError("one factor matrix per mode required");
  const std::size_t r = factors_[0].cols();
  if (r == 0) throw ShapeError("rank must be at least 1");
  for (std::size_t n = 0; n < factors_.size(); ++n) {
    if (factors_[n].rows() != shape_.dims[n] || factors_[n].cols() != r) {
      throw ShapeError("factor " + std::to_string(n) + " has the wrong dimensions");
    }
  }
}

const ValueStats& CPModel::stats() const {
  if (!stats_) throw StateError("value statistics are not bound; train the model first");
  return *stats_;
}

std::vector<std::span<const double>> CPModel::parameter_blocks() const {
  std::vector<std::span<const double>> blocks;
  for (const auto& f : factors_) blocks.emplace_back(f.values());
  return blocks;
}

CPModel init_model(const Shape& shape, const CPTrainConfig& config) {
  config.validate(&shape);
  const double scale = config.resolved_init_scale(shape.order());
  Rng rng(config.seed);
  std::vector<Matrix> factors;
  factors.reserve(shape.order());
  for (auto extent : shape.dims) {
    Matrix f(extent, config.rank);
    for (auto& v : f.values()) v = scale == 0.0 ? 0.0 : rng.uniform(-scale, scale);
    factors.push_back(std::move(f));
  }
  return CPModel(shape, std::move(factors));
}

namespace {

void check_coord(const CPModel& model, CoordView coord) {
  if (coord.size() != model.order()) throw ShapeError("coordinate order mismatch");
  for (std::size_t n = 0; n < coord.size(); ++n) {
    if (coord[n] >= model.shape().dims[n]) throw BoundsError(n, coord[n], model.shape().dims[n]);
  }
}

double predict_unchecked(const std::vector<Matrix>& factors, CoordView coord) {
  const std::size_t rank = factors[0].cols();
  double sum = 0.0;
  for (std::size_t r = 0; r < rank; ++r) {
    double prod = 1.0;
    for (std::size_t n = 0; n < factors.size(); ++n) prod *= factors[n](coord[n], r);
    sum += prod;
  }
  return sum;
}

}  // namespace

double predict_raw(const CPModel& model, CoordView coord) {
  check_coord(model, coord);
  return predict_unchecked(model.factors(), coord);
}

double predict(const CPModel& model, CoordView coord) {
  const auto& stats = model.stats();
  return stats.mean + stats.std * predict_raw(model, coord);
}

double smoothness_penalty(const CPModel& model, std::span<const std::size_t> ordinal_modes) {
  double total = 0.0;
  for (auto n : ordinal_modes) {
    const auto& f = model.factors().at(n);
    for (std::size_t i = 0; i + 1 < f.rows(); ++i) {
      for (std::size_t r = 0; r < f.cols(); ++r) {
        const double d = f(i + 1, r) - f(i, r);
        total += d * d;
      }
    }
  }
  return total;
}

double cp_objective(const CPModel& model, const SparseTensor& data,
                    std::span<const std::size_t> entries, const CPTrainConfig& config,
                    std::vector<Matrix>* gradient) {
  const auto& stats = model.stats();
  const auto& factors = model.factors();
  const std::size_t order = model.order();
  const std::size_t rank = model.rank();

  if (gradient) {
    gradient->clear();
    for (const auto& f : factors) gradient->emplace_back(f.rows(), f.cols());
  }

  // Data term. prefix[n] = prod_{m<n}, suffix[n] = prod_{m>n}, per component.
  double data_loss = 0.0;
  const double inv_batch = entries.empty() ? 0.0 : 1.0 / static_cast<double>(entries.size());
  std::vector<double> prefix(order + 1), suffix(order + 1);
  for (auto e : entries) {
    const auto coord = data.coord(e);
    const double target = (data.value(e) - stats.mean) / stats.std;
    const double residual = predict_unchecked(factors, coord) - target;
    data_loss += residual * residual;
    if (!gradient) continue;
    const double scale = 2.0 * residual * inv_batch;
    for (std::size_t r = 0; r < rank; ++r) {
      prefix[0] = 1.0;
      for (std::size_t n = 0; n < order; ++n) prefix[n + 1] = prefix[n] * factors[n](coord[n], r);
      suffix[order] = 1.0;
      for (std::size_t n = order; n-- > 0;) suffix[n] = suffix[n + 1] * factors[n](coord[n], r);
      for (std::size_t n = 0; n < order; ++n) {
        (*gradient)[n](coord[n], r) += scale * prefix[n] * suffix[n + 1];
      }
    }
  }
  double objective = data_loss * inv_batch;

  if (config.l2 > 0.0) {
    double norm = 0.0;
    for (std::size_t n = 0; n < order; ++n) {
      const auto values = factors[n].values();
      for (double v : values) norm += v * v;
      if (gradient) {
        auto g = (*gradient)[n].values();
        for (std::size_t i = 0; i < values.size(); ++i) g[i] += 2.0 * config.l2 * values[i];
      }
    }
    objective += config.l2 * norm;
  }

  if (config.smooth_lambda > 0.0) {
    const auto modes = config.resolved_ordinal_modes(model.shape());
    objective += config.smooth_lambda * smoothness_penalty(model, modes);
    if (gradient) {
      const double c = 2.0 * config.smooth_lambda;
      for (auto n : modes) {
        const auto& f = factors[n];
        auto& g = (*gradient)[n];
        for (std::size_t i = 0; i + 1 < f.rows(); ++i) {
          for (std::size_t r = 0; r < f.cols(); ++r) {
            const double d = f(i + 1, r) - f(i, r);
            g(i + 1, r) += c * d;
            g(i, r) -= c * d;
          }
        }
      }
    }
  }
  return objective;
}

CPTrainResult cp_train(CPModel model, const SparseTensor& data, const CPTrainConfig& config,
                       const SparseTensor* validation) {
  config.validate(&model.shape());
  if (data.empty()) throw DatasetError("training tensor is empty");
  if (data.shape().dims != model.shape().dims) {
    throw ShapeError("training tensor shape does not match the model");
  }
  if (validation && validation->shape().dims != model.shape().dims) {
    throw ShapeError("validation tensor shape does not match the model");
  }
  if (data.has_duplicates()) throw StateError("training tensor has duplicate coordinates");

  model.bind_stats(value_stats(data.values()));

  std::vector<std::span<double>> params;
  for (auto& f : model.mutable_factors()) params.emplace_back(f.values());
  AdamState adam = make_adam_state(params, {config.learning_rate, 0.9, 0.999, 1e-8});
  std::vector<Matrix> gradient;
  std::vector<std::span<const double>> grad_views;
  std::vector<Matrix> best;

  LoopHooks hooks;
  hooks.step = [&](std::span<const std::size_t> batch) {
    const double loss = cp_objective(model, data, batch, config, &gradient);
    grad_views.clear();
    for (const auto& g : gradient) grad_views.emplace_back(g.values());
    adam_step(params, grad_views, adam);
    return loss;
  };
  if (validation && !validation->empty()) {
    hooks.validate = [&] {
      return tensor_mae(*validation, [&](CoordView c) { return predict(model, c); });
    };
    hooks.save_best = [&] { best = model.factors(); };
    hooks.restore_best = [&] {
      for (std::size_t n = 0; n < best.size(); ++n) {
        std::copy(best[n].values().begin(), best[n].values().end(),
                  model.mutable_factors()[n].values().begin());
      }
    };
  }

  LoopConfig loop{config.epochs, config.batch_size, config.learning_rate, config.patience,
                  config.seed};
  TrainReport report = run_training_loop(data.nnz(), loop, hooks);
  report.snapshot_id = parameter_fingerprint(model.parameter_blocks());
  return {std::move(model), std::move(report)};
}

}  // namespace matten
