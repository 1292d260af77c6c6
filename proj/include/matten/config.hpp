// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "matten/model.hpp"
#include "matten/synthetic.hpp"
#include "matten/tensorize.hpp"

namespace matten {

using Json = nlohmann::ordered_json;

// Every reader below is strict: unknown keys and wrongly typed values raise
// ConfigError. Every writer emits the fully resolved document, defaults
// included, so an echoed config reproduces the run.

TensorizeConfig tensorize_config_from_json(const Json& doc);
Json to_json(const TensorizeConfig& config);

/// {"kind": "cpd" | "cpd_s" | "neat" | "mlp", ...hyperparameters}
ModelSpec model_spec_from_json(const Json& doc);
Json to_json(const ModelSpec& spec);

PlantedSpec planted_spec_from_json(const Json& doc);
Json to_json(const PlantedSpec& spec);

struct RunConfig {
  std::string dataset;                 ///< .csv (tensorized) or tensor file
  std::optional<PlantedSpec> synthetic;  ///< used instead of `dataset`
  TensorizeConfig tensorize;
  std::vector<ModelSpec> models;
  std::size_t train_count = 0;
  std::size_t iterations = 5;
  std::uint64_t base_seed = 0;
  std::size_t samples = 5;
  std::vector<std::size_t> sweep_sizes;
  std::vector<std::string> external_baselines;  ///< placeholder rows in results.csv
  std::map<std::string, double> reference_mae;  ///< per model name, echoed in results
  std::optional<double> flag_threshold;         ///< flag rows whose mean MAE exceeds it
  std::string output_dir = ".";

  void validate() const;
};

RunConfig run_config_from_json(const Json& doc);
Json to_json(const RunConfig& config);

/// Parses JSON text, mapping syntax errors to ConfigError.
Json parse_json(std::string_view text);

Json to_json(const SkipReport& report);
Json to_json(const TrainReport& report);

}  // namespace matten
