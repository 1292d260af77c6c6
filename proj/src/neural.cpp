// SPDX-License-Identifier: Apache-2.0
#include "matten/neural.hpp"

#include <atomic>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "matten/error.hpp"
#include "matten/io.hpp"

namespace matten {

namespace {

std::uint64_t next_revision() noexcept {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

double activate(Activation a, double z) {
  return a == Activation::relu ? (z > 0.0 ? z : 0.0) : z;
}

double activate_grad(Activation a, double z) {
  return a == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0;
}

}  // namespace

const char* to_string(Activation activation) noexcept {
  return activation == Activation::relu ? "relu" : "identity";
}

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ShapeError("a network needs at least one layer");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& layer = layers_[k];
    if (layer.in() == 0 || layer.out() == 0) throw ShapeError("empty layer");
    if (layer.bias.size() != layer.out()) {
      throw ShapeError("layer " + std::to_string(k) + ": bias length does not match outputs");
    }
    if (k > 0 && layers_[k - 1].out() != layer.in()) {
      throw ShapeError("layer " + std::to_string(k) + ": input width does not chain");
    }
  }
  if (layers_.back().activation != Activation::identity) {
    throw ShapeError("the output layer must use the identity activation");
  }
  touch();
}

DenseNet DenseNet::glorot(std::span<const std::size_t> widths, Rng& rng) {
  if (widths.size() < 2) throw ShapeError("need at least input and output widths");
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const std::size_t in = widths[k];
    const std::size_t out = widths[k + 1];
    DenseLayer layer{Matrix(out, in), std::vector<double>(out, 0.0),
                     k + 2 == widths.size() ? Activation::identity : Activation::relu};
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (auto& w : layer.weights.values()) w = rng.uniform(-limit, limit);
    layers.push_back(std::move(layer));
  }
  return DenseNet(std::move(layers));
}

std::size_t DenseNet::input_width() const {
  if (layers_.empty()) throw StateError("empty network");
  return layers_.front().in();
}

std::size_t DenseNet::output_width() const {
  if (layers_.empty()) throw StateError("empty network");
  return layers_.back().out();
}

std::size_t DenseNet::parameter_count() const noexcept {
  std::size_t count = 0;
  for (const auto& layer : layers_) count += layer.weights.size() + layer.bias.size();
  return count;
}

DenseLayer& DenseNet::mutable_layer(std::size_t i) {
  touch();
  return layers_.at(i);
}

std::vector<std::span<double>> DenseNet::parameters() {
  touch();
  std::vector<std::span<double>> out;
  for (auto& layer : layers_) {
    out.emplace_back(layer.weights.values());
    out.emplace_back(layer.bias);
  }
  return out;
}

std::vector<std::span<const double>> DenseNet::parameters() const {
  std::vector<std::span<const double>> out;
  for (const auto& layer : layers_) {
    out.emplace_back(layer.weights.values());
    out.emplace_back(layer.bias);
  }
  return out;
}

void DenseNet::touch() noexcept { revision_ = next_revision(); }

NetGrads NetGrads::zeros_like(const DenseNet& net) {
  NetGrads g;
  for (const auto& layer : net.layers()) {
    g.weights.emplace_back(layer.out(), layer.in());
    g.bias.emplace_back(layer.out(), 0.0);
  }
  return g;
}

void NetGrads::clear() {
  for (auto& w : weights) std::fill(w.values().begin(), w.values().end(), 0.0);
  for (auto& b : bias) std::fill(b.begin(), b.end(), 0.0);
}

std::vector<std::span<const double>> NetGrads::views() const {
  std::vector<std::span<const double>> out;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    out.emplace_back(weights[k].values());
    out.emplace_back(bias[k]);
  }
  return out;
}

namespace {

// Runs layers [first, end) given the already-filled tape.inputs[first].
std::vector<double> forward_from(const DenseNet& net, std::size_t first, Tape& tape) {
  const auto& layers = net.layers();
  for (std::size_t k = first; k < layers.size(); ++k) {
    const auto& layer = layers[k];
    const auto& x = tape.inputs[k];
    auto& z = tape.preactivations[k];
    z.assign(layer.bias.begin(), layer.bias.end());
    for (std::size_t o = 0; o < layer.out(); ++o) {
      const auto w = layer.weights.row(o);
      double acc = z[o];
      for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * x[i];
      z[o] = acc;
    }
    if (k + 1 < layers.size()) {
      auto& next = tape.inputs[k + 1];
      next.resize(layer.out());
      for (std::size_t o = 0; o < layer.out(); ++o) next[o] = activate(layer.activation, z[o]);
    }
  }
  // The head is an identity layer, so its output is its pre-activation.
  return tape.preactivations.back();
}

void prepare_tape(const DenseNet& net, Tape& tape) {
  const auto depth = net.layers().size();
  tape.revision = net.revision();
  tape.inputs.resize(depth);
  tape.preactivations.resize(depth);
}

}  // namespace

std::vector<double> forward(const DenseNet& net, std::span<const double> x, Tape& tape) {
  if (net.layers().empty()) throw StateError("empty network");
  if (x.size() != net.input_width()) {
    throw ShapeError("input has width " + std::to_string(x.size()) + ", network expects " +
                     std::to_string(net.input_width()));
  }
  prepare_tape(net, tape);
  tape.one_hot = false;
  tape.hot.clear();
  tape.inputs[0].assign(x.begin(), x.end());
  return forward_from(net, 0, tape);
}

std::pair<std::vector<double>, Tape> forward(const DenseNet& net, std::span<const double> x) {
  Tape tape;
  auto y = forward(net, x, tape);
  return {std::move(y), std::move(tape)};
}

std::vector<double> forward_one_hot(const DenseNet& net, std::span<const std::size_t> hot,
                                    Tape& tape) {
  if (net.layers().empty()) throw StateError("empty network");
  const auto& first = net.layers().front();
  for (auto h : hot) {
    if (h >= first.in()) throw ShapeError("one-hot index beyond the input width");
  }
  prepare_tape(net, tape);
  tape.one_hot = true;
  tape.hot.assign(hot.begin(), hot.end());
  tape.inputs[0].clear();

  auto& z = tape.preactivations[0];
  z.assign(first.bias.begin(), first.bias.end());
  for (std::size_t o = 0; o < first.out(); ++o) {
    const auto w = first.weights.row(o);
    double acc = z[o];
    for (auto h : hot) acc += w[h];
    z[o] = acc;
  }
  if (net.layers().size() == 1) return z;
  auto& next = tape.inputs[1];
  next.resize(first.out());
  for (std::size_t o = 0; o < first.out(); ++o) next[o] = activate(first.activation, z[o]);
  return forward_from(net, 1, tape);
}

std::vector<double> accumulate_backward(const DenseNet& net, const Tape& tape,
                                        std::span<const double> upstream, NetGrads& acc) {
  const auto& layers = net.layers();
  if (tape.revision != net.revision() || tape.preactivations.size() != layers.size()) {
    throw StateError("tape was recorded against different network parameters");
  }
  if (upstream.size() != net.output_width()) throw ShapeError("upstream width mismatch");
  if (acc.weights.size() != layers.size()) throw ShapeError("gradient buffer mismatch");

  std::vector<double> delta(upstream.begin(), upstream.end());
  std::vector<double> below;
  for (std::size_t k = layers.size(); k-- > 0;) {
    const auto& layer = layers[k];
    const auto& z = tape.preactivations[k];
    for (std::size_t o = 0; o < layer.out(); ++o) delta[o] *= activate_grad(layer.activation, z[o]);

    auto& gw = acc.weights[k];
    auto& gb = acc.bias[k];
    if (k == 0 && tape.one_hot) {
      for (std::size_t o = 0; o < layer.out(); ++o) {
        gb[o] += delta[o];
        for (auto h : tape.hot) gw(o, h) += delta[o];
      }
      return {};
    }
    const auto& x = tape.inputs[k];
    below.assign(layer.in(), 0.0);
    for (std::size_t o = 0; o < layer.out(); ++o) {
      const double d = delta[o];
      gb[o] += d;
      if (d == 0.0) continue;
      auto grow = gw.row(o);
      const auto wrow = layer.weights.row(o);
      for (std::size_t i = 0; i < layer.in(); ++i) {
        grow[i] += d * x[i];
        below[i] += d * wrow[i];
      }
    }
    delta.swap(below);
  }
  return delta;
}

Backward backward(const DenseNet& net, const Tape& tape, std::span<const double> upstream) {
  Backward out{NetGrads::zeros_like(net), {}};
  out.input_grad = accumulate_backward(net, tape, upstream, out.grads);
  return out;
}

AdamState make_adam_state(std::span<const std::span<double>> params, AdamConfig config) {
  AdamState state;
  state.config = config;
  for (const auto& p : params) {
    state.m.emplace_back(p.size(), 0.0);
    state.v.emplace_back(p.size(), 0.0);
  }
  return state;
}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("Adam: parameter, gradient and state block counts differ");
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size() || params[b].size() != state.m[b].size()) {
      throw ShapeError("Adam: block " + std::to_string(b) + " sizes differ");
    }
  }
  const auto& c = state.config;
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b];
    const auto g = grads[b];
    auto& m = state.m[b];
    auto& v = state.v[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correct1;
      const double v_hat = v[i] / correct2;
      p[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

void write_net(std::ostream& os, const DenseNet& net) {
  os << "net " << net.layers().size() << '\n';
  for (const auto& layer : net.layers()) {
    os << "layer " << layer.in() << ' ' << layer.out() << ' ' << to_string(layer.activation)
       << '\n';
    for (std::size_t o = 0; o < layer.out(); ++o) {
      const auto row = layer.weights.row(o);
      for (std::size_t i = 0; i < row.size(); ++i) {
        os << (i ? " " : "") << format_double(row[i]);
      }
      os << '\n';
    }
    for (std::size_t o = 0; o < layer.out(); ++o) {
      os << (o ? " " : "") << format_double(layer.bias[o]);
    }
    os << '\n';
  }
}

namespace {

std::string expect_word(std::istream& is, const char* what) {
  std::string word;
  if (!(is >> word)) throw DatasetError(std::string("checkpoint truncated: expected ") + what);
  return word;
}

double read_number(std::istream& is) {
  return parse_double(expect_word(is, "a number"));
}

}  // namespace

DenseNet read_net(std::istream& is) {
  if (expect_word(is, "'net'") != "net") throw DatasetError("checkpoint: expected 'net'");
  const auto depth = parse_size(expect_word(is, "layer count"));
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k < depth; ++k) {
    if (expect_word(is, "'layer'") != "layer") throw DatasetError("checkpoint: expected 'layer'");
    const auto in = parse_size(expect_word(is, "layer input width"));
    const auto out = parse_size(expect_word(is, "layer output width"));
    const auto act = expect_word(is, "activation");
    DenseLayer layer{Matrix(out, in), std::vector<double>(out), Activation::identity};
    if (act == "relu") {
      layer.activation = Activation::relu;
    } else if (act != "identity") {
      throw DatasetError("checkpoint: unknown activation '" + act + "'");
    }
    for (auto& w : layer.weights.values()) w = read_number(is);
    for (auto& b : layer.bias) b = read_number(is);
    layers.push_back(std::move(layer));
  }
  try {
    return DenseNet(std::move(layers));
  } catch (const ShapeError& e) {
    throw DatasetError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace matten
