// SPDX-License-Identifier: Apache-2.0
#include "matten/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "matten/error.hpp"
#include "matten/rng.hpp"
#include "matten/training.hpp"

namespace matten {

Shape PlantedSpec::shape() const {
  std::vector<ModeKind> resolved = kinds;
  if (resolved.empty()) {
    resolved.assign(dims.size(), ModeKind::element);
    if (dims.size() % 2 == 0) {
      for (std::size_t n = dims.size() / 2; n < dims.size(); ++n) resolved[n] = ModeKind::count;
    }
  }
  return Shape(dims, std::move(resolved));
}

double PlantedTensor::value_at(CoordView coord) const {
  double sum = 0.0;
  for (std::size_t r = 0; r < factors[0].cols(); ++r) {
    double prod = 1.0;
    for (std::size_t n = 0; n < factors.size(); ++n) prod *= factors[n](coord[n], r);
    sum += prod;
  }
  return (sum - shift) / scale;
}

namespace {

Coord unravel(std::uint64_t cell, const std::vector<std::size_t>& dims) {
  Coord coord(dims.size());
  for (std::size_t n = dims.size(); n-- > 0;) {
    coord[n] = static_cast<Index>(cell % dims[n]);
    cell /= dims[n];
  }
  return coord;
}

}  // namespace

PlantedTensor make_planted_cp(const PlantedSpec& spec) {
  const Shape shape = spec.shape();
  if (spec.rank < 1) throw ConfigError("planted rank must be at least 1");
  if (!(spec.noise >= 0.0)) throw ConfigError("noise must be non-negative");
  const double cells = shape.cell_count();
  if (cells > 9.0e15) throw ConfigError("planted tensor has too many cells");
  const auto total = static_cast<std::uint64_t>(cells);
  const std::uint64_t wanted = spec.entries ? *spec.entries : total;
  if (wanted == 0 || wanted > total) {
    throw ConfigError("planted entry count must lie in [1, " + std::to_string(total) + "]");
  }

  Rng rng(spec.seed + kPlantedStream);
  PlantedTensor out;
  for (auto extent : shape.dims) {
    Matrix f(extent, spec.rank);
    for (auto& v : f.values()) v = rng.uniform(-1.0, 1.0);
    out.factors.push_back(std::move(f));
  }

  std::vector<std::uint64_t> cell_ids;
  if (total <= 4'000'000) {
    std::vector<std::uint64_t> all(total);
    std::iota(all.begin(), all.end(), std::uint64_t{0});
    for (std::uint64_t i = 0; i < wanted; ++i) {
      std::swap(all[i], all[i + rng.below(total - i)]);
    }
    cell_ids.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(wanted));
  } else {
    if (wanted > total / 2) throw ConfigError("planted tensor too dense to sample by rejection");
    std::unordered_set<std::uint64_t> seen;
    while (cell_ids.size() < wanted) {
      const auto id = rng.below(total);
      if (seen.insert(id).second) cell_ids.push_back(id);
    }
  }
  std::sort(cell_ids.begin(), cell_ids.end());

  std::vector<Coord> coords;
  std::vector<double> clean;
  coords.reserve(cell_ids.size());
  clean.reserve(cell_ids.size());
  for (auto id : cell_ids) {
    coords.push_back(unravel(id, shape.dims));
    clean.push_back(out.value_at(coords.back()));
  }
  if (spec.standardize) {
    const auto stats = value_stats(clean);
    out.shift = stats.mean;
    out.scale = stats.std;
  }

  out.observed = SparseTensor(shape);
  out.observed.reserve(coords.size());
  const double half_width = spec.noise * std::sqrt(3.0);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    double v = (clean[i] - out.shift) / out.scale;
    if (half_width > 0.0) v += rng.uniform(-half_width, half_width);
    out.observed.insert(coords[i], v);
  }
  return out;
}

}  // namespace matten
