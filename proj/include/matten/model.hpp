// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>

#include "matten/baseline.hpp"
#include "matten/cpd.hpp"
#include "matten/neat.hpp"
#include "matten/sptensor.hpp"
#include "matten/training.hpp"

namespace matten {

enum class ModelKind { cpd, cpd_s, neat, mlp };

const char* to_string(ModelKind kind) noexcept;
ModelKind model_kind_from_string(std::string_view text);

/// smooth_lambda used by "cpd_s" when a config does not set one.
inline constexpr double kDefaultSmoothLambda = 1e-3;

/// Which model to train and with what hyperparameters. Only the config
/// matching `kind` is used; seeds are supplied per run.
struct ModelSpec {
  ModelKind kind = ModelKind::cpd;
  CPTrainConfig cp;
  NeatTrainConfig neat;
  MLPTrainConfig mlp;
  /// Share of the training entries held out for early stopping. Only used
  /// when the model config sets `patience`.
  double validation_fraction = 0.1;

  std::optional<std::size_t> patience() const;
  void validate() const;
};

/// Anything that maps a coordinate to a predicted value in original units.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual double predict(CoordView coord) const = 0;
};

/// A trained model of any kind together with the labels of the tensor it
/// was trained on, so formulas can be encoded at prediction time.
class TrainedModel final : public Predictor {
 public:
  using Impl = std::variant<CPModel, NeatModel, MLPRegressor>;

  TrainedModel(ModelSpec spec, std::uint64_t seed, IndexMap labels, Impl impl);

  double predict(CoordView coord) const override;

  ModelKind kind() const noexcept { return spec_.kind; }
  const ModelSpec& spec() const noexcept { return spec_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const Shape& shape() const;
  const IndexMap& labels() const noexcept { return labels_; }
  const Impl& impl() const noexcept { return impl_; }

 private:
  ModelSpec spec_;
  std::uint64_t seed_;
  IndexMap labels_;
  Impl impl_;
};

struct FitResult {
  TrainedModel model;
  TrainReport report;
};

/// Trains `spec` on `train` with every RNG seeded from `seed`.
FitResult fit_model(const ModelSpec& spec, const SparseTensor& train, std::uint64_t seed,
                    const SparseTensor* validation = nullptr);

/// Encodes `formula` with the model's labels (strict policies) and predicts.
/// Throws DatasetError when the formula cannot be placed in the tensor.
double predict_formula(const TrainedModel& model, std::string_view formula);

// Checkpoint text:
//   matten-model 1
//   kind <cpd|cpd_s|neat|mlp>
//   seed <n>
//   config <single-line JSON of the model spec>
//   shape d1,...,dN
//   kinds k1,...,kN
//   labels <mode> l0,l1,...          one line per mode
//   stats <mean> <std>
//   ... kind-specific parameter blocks, decimals with 17 significant digits
//   end
void write_model(std::ostream& os, const TrainedModel& model);
TrainedModel read_model(std::istream& is);
void save_model(const std::string& path, const TrainedModel& model);
TrainedModel load_model(const std::string& path);

}  // namespace matten
