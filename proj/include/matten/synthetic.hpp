// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "matten/matrix.hpp"
#include "matten/sptensor.hpp"

namespace matten {

/// A tensor generated from known CP factors, for recovery experiments.
struct PlantedSpec {
  std::vector<std::size_t> dims{15, 15, 10, 10};
  /// Empty: first half element modes, second half count modes (even order),
  /// otherwise all element modes.
  std::vector<ModeKind> kinds;
  std::size_t rank = 3;
  std::optional<std::size_t> entries;  ///< observed cells; default every cell
  double noise = 0.0;                  ///< standard deviation of uniform noise
  bool standardize = true;
  std::uint64_t seed = 0;

  Shape shape() const;
};

struct PlantedTensor {
  SparseTensor observed;
  std::vector<Matrix> factors;  ///< U(-1, 1) entries
  double shift = 0.0;
  double scale = 1.0;

  /// Noise-free value of any cell on the same scale as `observed`.
  double value_at(CoordView coord) const;
};

/// Seed offset for planted tensors, so a planted seed never replays a model
/// initialization stream with the same seed.
inline constexpr std::uint64_t kPlantedStream = 0xBF58476D1CE4E5B9ULL;

/// Draws factors from U(-1, 1) with Rng(seed + kPlantedStream), samples `entries` distinct cells uniformly
/// and stores (cp(cell) - shift) / scale, where shift/scale are the mean and
/// std of the sampled noise-free values when `standardize` is set. Noise is
/// U(-a, a) with a = noise * sqrt(3), i.e. standard deviation `noise`, added
/// after standardization.
PlantedTensor make_planted_cp(const PlantedSpec& spec);

}  // namespace matten
