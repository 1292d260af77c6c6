// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace matten {

class SparseTensor;

struct TrainReport {
  std::vector<double> loss;      ///< mean training objective per epoch
  std::vector<double> val_mae;   ///< per epoch, only when a validation set is given
  double seconds = 0.0;          ///< wall clock spent in the epoch loop
  std::size_t epochs_run = 0;
  std::optional<std::size_t> best_epoch;  ///< restored epoch under early stopping, 1-based
  std::string snapshot_id;       ///< hash of the final parameters
};

/// Target z-score statistics. The std is floored at 1e-12.
struct ValueStats {
  double mean = 0.0;
  double std = 1.0;

  bool operator==(const ValueStats&) const = default;
};

ValueStats value_stats(std::span<const double> values);

/// FNV-1a over the raw bytes of the given blocks, rendered as 16 hex digits.
std::string parameter_fingerprint(std::span<const std::span<const double>> blocks);

struct LoopConfig {
  std::size_t epochs = 0;
  std::size_t batch_size = 256;
  double learning_rate = 0.0;  ///< only reported in divergence errors
  std::optional<std::size_t> patience;
  std::uint64_t seed = 0;
};

struct LoopHooks {
  /// Takes one optimizer step on the given entries; returns the batch objective.
  std::function<double(std::span<const std::size_t>)> step;
  /// Validation MAE in original units. Empty when there is no validation set.
  std::function<double()> validate;
  std::function<void()> save_best;
  std::function<void()> restore_best;
};

/// Seed offset for the per-epoch shuffle stream, so shuffling does not
/// replay the initialization stream.
inline constexpr std::uint64_t kShuffleStream = 0x9E3779B97F4A7C15ULL;

/// Shared epoch loop: shuffles entry order each epoch with
/// Rng(seed + kShuffleStream), walks minibatches, records the size-weighted
/// mean batch objective, validates, and handles early stopping. Throws
/// DivergenceError on a non-finite batch objective.
TrainReport run_training_loop(std::size_t entries, const LoopConfig& config,
                              const LoopHooks& hooks);

/// Mean absolute error of `predict` over every entry of `data`.
double tensor_mae(const SparseTensor& data,
                  const std::function<double(std::span<const std::uint32_t>)>& predict);

}  // namespace matten
