// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "matten/matrix.hpp"
#include "matten/rng.hpp"

namespace matten {

enum class Activation { relu, identity };

const char* to_string(Activation activation) noexcept;

struct DenseLayer {
  Matrix weights;            ///< out x in
  std::vector<double> bias;  ///< out
  Activation activation = Activation::identity;

  std::size_t in() const noexcept { return weights.cols(); }
  std::size_t out() const noexcept { return weights.rows(); }
};

/// Fixed-topology feedforward network. The last layer is always an identity
/// regression head. Every mutable access bumps `revision()`, which is how
/// backward detects a tape recorded against different parameters.
class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(std::vector<DenseLayer> layers);

  /// widths = {in, hidden..., out}; relu hidden layers, identity head.
  /// Weights ~ U(-sqrt(6/(in+out)), +sqrt(6/(in+out))), biases zero.
  static DenseNet glorot(std::span<const std::size_t> widths, Rng& rng);

  std::size_t input_width() const;
  std::size_t output_width() const;
  std::size_t parameter_count() const noexcept;

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  DenseLayer& mutable_layer(std::size_t i);

  /// W0, b0, W1, b1, ... in layer order.
  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;

  std::uint64_t revision() const noexcept { return revision_; }

 private:
  void touch() noexcept;

  std::vector<DenseLayer> layers_;
  std::uint64_t revision_ = 0;
};

/// Activations cached by forward.
struct Tape {
  std::uint64_t revision = 0;
  bool one_hot = false;
  std::vector<std::size_t> hot;                    ///< active inputs when one_hot
  std::vector<std::vector<double>> inputs;         ///< input to each layer
  std::vector<std::vector<double>> preactivations; ///< per layer
};

/// Gradient buffers shaped like a DenseNet.
struct NetGrads {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> bias;

  static NetGrads zeros_like(const DenseNet& net);
  void clear();
  /// Same ordering as DenseNet::parameters().
  std::vector<std::span<const double>> views() const;
};

/// Throws ShapeError when x does not match the input width.
std::vector<double> forward(const DenseNet& net, std::span<const double> x, Tape& tape);
std::pair<std::vector<double>, Tape> forward(const DenseNet& net, std::span<const double> x);

/// Forward pass for an input that is zero except for ones at `hot`. The
/// first layer reduces to a sum of weight columns.
std::vector<double> forward_one_hot(const DenseNet& net, std::span<const std::size_t> hot,
                                    Tape& tape);

/// Adds the parameter gradients of upstream . net(x) into `acc` and returns
/// the gradient with respect to the input (empty for one-hot tapes). Throws
/// StateError for a stale tape.
std::vector<double> accumulate_backward(const DenseNet& net, const Tape& tape,
                                        std::span<const double> upstream, NetGrads& acc);

struct Backward {
  NetGrads grads;
  std::vector<double> input_grad;
};

Backward backward(const DenseNet& net, const Tape& tape, std::span<const double> upstream);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;
};

AdamState make_adam_state(std::span<const std::span<double>> params, AdamConfig config);

/// Bias-corrected Adam update applied in place to each parameter block.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state);

void write_net(std::ostream& os, const DenseNet& net);
DenseNet read_net(std::istream& is);

}  // namespace matten
