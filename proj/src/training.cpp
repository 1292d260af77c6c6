// SPDX-License-Identifier: Apache-2.0
#include "matten/training.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>

#include "matten/error.hpp"
#include "matten/rng.hpp"
#include "matten/sptensor.hpp"

namespace matten {

ValueStats value_stats(std::span<const double> values) {
  ValueStats stats;
  if (values.empty()) return stats;
  const double n = static_cast<double>(values.size());
  stats.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
  stats.std = std::max(std::sqrt(ss / n), 1e-12);
  return stats;
}

std::string parameter_fingerprint(std::span<const std::span<const double>> blocks) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& block : blocks) {
    for (double v : block) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof v);
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
      }
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TrainReport run_training_loop(std::size_t entries, const LoopConfig& config,
                              const LoopHooks& hooks) {
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (config.patience && *config.patience == 0) throw ConfigError("patience must be positive");

  TrainReport report;
  const auto start = std::chrono::steady_clock::now();
  const bool early_stopping = config.patience && hooks.validate;

  std::vector<std::size_t> order(entries);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffler(config.seed + kShuffleStream);

  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffler.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (std::size_t begin = 0; begin < entries; begin += config.batch_size) {
      const std::size_t end = std::min(entries, begin + config.batch_size);
      const double batch_loss =
          hooks.step(std::span<const std::size_t>(order.data() + begin, end - begin));
      if (!std::isfinite(batch_loss)) throw DivergenceError(epoch + 1, config.learning_rate);
      total += batch_loss * static_cast<double>(end - begin);
    }
    report.loss.push_back(entries ? total / static_cast<double>(entries) : 0.0);
    report.epochs_run = epoch + 1;

    if (!hooks.validate) continue;
    const double mae = hooks.validate();
    if (!std::isfinite(mae)) throw DivergenceError(epoch + 1, config.learning_rate);
    report.val_mae.push_back(mae);
    if (!early_stopping) continue;
    if (mae < best) {
      best = mae;
      since_best = 0;
      report.best_epoch = epoch + 1;
      if (hooks.save_best) hooks.save_best();
    } else if (++since_best >= *config.patience) {
      break;
    }
  }
  if (early_stopping && report.best_epoch && hooks.restore_best) hooks.restore_best();

  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double tensor_mae(const SparseTensor& data,
                  const std::function<double(std::span<const std::uint32_t>)>& predict) {
  if (data.empty()) throw ArgumentError("cannot compute MAE over an empty tensor");
  double total = 0.0;
  for (std::size_t e = 0; e < data.nnz(); ++e) {
    total += std::abs(data.value(e) - predict(data.coord(e)));
  }
  return total / static_cast<double>(data.nnz());
}

}  // namespace matten
