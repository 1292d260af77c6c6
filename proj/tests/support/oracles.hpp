// SPDX-License-Identifier: Apache-2.0
// Independent reference computations used as test oracles.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "matten/neural.hpp"
#include "matten/sptensor.hpp"

namespace matten::testing {

inline constexpr double kFdStep = 1e-5;
inline constexpr double kFdTolerance = 1e-4;

/// |a - n| / max(|a|, |n|, floor). The floor keeps round-off on near-zero
/// gradients from reading as a large relative error.
inline double relative_error(double analytic, double numeric, double floor = 1e-5) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct FdMismatch {
  std::size_t block;
  std::size_t index;
  double analytic;
  double numeric;
  double error;
};

/// Central differences of `objective` with respect to every entry of every
/// block, compared with `analytic` (same layout). Returns the worst entry.
inline FdMismatch worst_fd_mismatch(const std::vector<std::span<double>>& params,
                                    const std::vector<std::span<const double>>& analytic,
                                    const std::function<double()>& objective,
                                    double step = kFdStep) {
  FdMismatch worst{0, 0, 0.0, 0.0, -1.0};
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double saved = params[b][i];
      params[b][i] = saved + step;
      const double plus = objective();
      params[b][i] = saved - step;
      const double minus = objective();
      params[b][i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double err = relative_error(analytic[b][i], numeric);
      if (err > worst.error) worst = {b, i, analytic[b][i], numeric, err};
    }
  }
  return worst;
}

/// Scalar re-implementation of a dense relu/identity network.
inline std::vector<double> brute_force_forward(const DenseNet& net, std::vector<double> x) {
  for (const auto& layer : net.layers()) {
    std::vector<double> y(layer.out(), 0.0);
    for (std::size_t o = 0; o < layer.out(); ++o) {
      double acc = layer.bias[o];
      for (std::size_t i = 0; i < layer.in(); ++i) acc += layer.weights(o, i) * x[i];
      y[o] = layer.activation == Activation::relu ? (acc > 0.0 ? acc : 0.0) : acc;
    }
    x = std::move(y);
  }
  return x;
}

/// Coordinate set equality helper: sorted list of coordinates.
inline std::vector<Coord> sorted_coords(const SparseTensor& t) {
  std::vector<Coord> out;
  for (std::size_t e = 0; e < t.nnz(); ++e) {
    const auto c = t.coord(e);
    out.emplace_back(c.begin(), c.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace matten::testing
