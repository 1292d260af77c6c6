// SPDX-License-Identifier: Apache-2.0
#include "matten/config.hpp"

#include <algorithm>
#include <initializer_list>
#include <set>

#include "matten/error.hpp"

namespace matten {

namespace {

// Strict view over one JSON object: construction rejects unknown keys and
// every getter checks the value type. A JSON null counts as absent.
class Fields {
 public:
  Fields(const Json& doc, std::string where, std::initializer_list<const char*> allowed)
      : doc_(doc), where_(std::move(where)) {
    if (!doc_.is_object()) fail("expected a JSON object");
    const std::set<std::string> known(allowed.begin(), allowed.end());
    for (const auto& item : doc_.items()) {
      if (!known.count(item.key())) fail("unknown key '" + item.key() + "'");
    }
  }

  bool has(const char* key) const { return doc_.contains(key) && !doc_.at(key).is_null(); }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = doc_.at(key);
    if (!v.is_number()) fail_key(key, "expected a number");
    return v.get<double>();
  }

  std::size_t size(const char* key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    return as_size(doc_.at(key), key);
  }

  std::optional<std::size_t> optional_size(const char* key) const {
    if (!has(key)) return std::nullopt;
    return as_size(doc_.at(key), key);
  }

  std::optional<double> optional_number(const char* key) const {
    if (!has(key)) return std::nullopt;
    return number(key, 0.0);
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = doc_.at(key);
    if (!v.is_boolean()) fail_key(key, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = doc_.at(key);
    if (!v.is_string()) fail_key(key, "expected a string");
    return v.get<std::string>();
  }

  std::vector<std::size_t> sizes(const char* key) const {
    std::vector<std::size_t> out;
    if (!has(key)) return out;
    for (const auto& v : array(key)) out.push_back(as_size(v, key));
    return out;
  }

  std::vector<std::string> strings(const char* key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    for (const auto& v : array(key)) {
      if (!v.is_string()) fail_key(key, "expected an array of strings");
      out.push_back(v.get<std::string>());
    }
    return out;
  }

  const Json& array(const char* key) const {
    const auto& v = doc_.at(key);
    if (!v.is_array()) fail_key(key, "expected an array");
    return v;
  }

  const Json& object(const char* key) const {
    const auto& v = doc_.at(key);
    if (!v.is_object()) fail_key(key, "expected an object");
    return v;
  }

  const std::string& where() const { return where_; }

  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError(where_ + ": " + why);
  }
  [[noreturn]] void fail_key(const char* key, const std::string& why) const {
    throw ConfigError(where_ + "." + key + ": " + why);
  }

 private:
  std::size_t as_size(const Json& v, const char* key) const {
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return v.get<std::size_t>();
    fail_key(key, "expected a non-negative integer");
  }

  const Json& doc_;
  std::string where_;
};

template <typename Fn>
auto rethrow_as_config(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

Json optional_json(const std::optional<std::size_t>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

TensorizeConfig tensorize_config_from_json(const Json& doc) {
  const Fields f(doc, "tensorize",
                 {"arity", "max_count", "count_policy", "noninteger_policy", "dedup_policy",
                  "validate_symbols"});
  TensorizeConfig c;
  c.arity = f.size("arity", c.arity);
  c.max_count = f.size("max_count", c.max_count);
  c.count_policy = count_policy_from_string(f.string("count_policy", to_string(c.count_policy)));
  c.noninteger_policy =
      noninteger_policy_from_string(f.string("noninteger_policy", to_string(c.noninteger_policy)));
  c.dedup_policy = dedup_policy_from_string(f.string("dedup_policy", to_string(c.dedup_policy)));
  c.validate_symbols = f.boolean("validate_symbols", c.validate_symbols);
  c.validate();
  return c;
}

Json to_json(const TensorizeConfig& c) {
  return Json{{"arity", c.arity},
              {"max_count", c.max_count},
              {"count_policy", to_string(c.count_policy)},
              {"noninteger_policy", to_string(c.noninteger_policy)},
              {"dedup_policy", to_string(c.dedup_policy)},
              {"validate_symbols", c.validate_symbols}};
}

ModelSpec model_spec_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc.at("kind").is_string()) {
    throw ConfigError("model: a string 'kind' is required");
  }
  ModelSpec spec;
  spec.kind = model_kind_from_string(doc.at("kind").get<std::string>());
  const std::string where = std::string("model[") + to_string(spec.kind) + "]";

  switch (spec.kind) {
    case ModelKind::cpd:
    case ModelKind::cpd_s: {
      const Fields f(doc, where,
                     {"kind", "validation_fraction", "rank", "learning_rate", "epochs",
                      "batch_size", "l2", "smooth_lambda", "ordinal_modes", "init_scale",
                      "patience"});
      auto& c = spec.cp;
      spec.validation_fraction = f.number("validation_fraction", spec.validation_fraction);
      c.rank = f.size("rank", c.rank);
      c.learning_rate = f.number("learning_rate", c.learning_rate);
      c.epochs = f.size("epochs", c.epochs);
      c.batch_size = f.size("batch_size", c.batch_size);
      c.l2 = f.number("l2", c.l2);
      c.smooth_lambda =
          f.number("smooth_lambda", spec.kind == ModelKind::cpd_s ? kDefaultSmoothLambda : 0.0);
      if (f.has("ordinal_modes")) c.ordinal_modes = f.sizes("ordinal_modes");
      c.init_scale = f.optional_number("init_scale");
      c.patience = f.optional_size("patience");
      break;
    }
    case ModelKind::neat: {
      const Fields f(doc, where,
                     {"kind", "validation_fraction", "components", "embed_dim", "hidden",
                      "learning_rate", "epochs", "batch_size", "l2", "init_scale", "patience"});
      auto& c = spec.neat;
      spec.validation_fraction = f.number("validation_fraction", spec.validation_fraction);
      c.components = f.size("components", c.components);
      c.embed_dim = f.size("embed_dim", c.embed_dim);
      c.hidden = f.size("hidden", c.hidden);
      c.learning_rate = f.number("learning_rate", c.learning_rate);
      c.epochs = f.size("epochs", c.epochs);
      c.batch_size = f.size("batch_size", c.batch_size);
      c.l2 = f.number("l2", c.l2);
      c.init_scale = f.number("init_scale", c.init_scale);
      c.patience = f.optional_size("patience");
      break;
    }
    case ModelKind::mlp: {
      const Fields f(doc, where,
                     {"kind", "validation_fraction", "hidden", "learning_rate", "epochs",
                      "batch_size", "l2", "patience"});
      auto& c = spec.mlp;
      spec.validation_fraction = f.number("validation_fraction", spec.validation_fraction);
      if (f.has("hidden")) c.hidden = f.sizes("hidden");
      c.learning_rate = f.number("learning_rate", c.learning_rate);
      c.epochs = f.size("epochs", c.epochs);
      c.batch_size = f.size("batch_size", c.batch_size);
      c.l2 = f.number("l2", c.l2);
      c.patience = f.optional_size("patience");
      break;
    }
  }
  rethrow_as_config(where, [&] {
    spec.validate();
    return 0;
  });
  return spec;
}

Json to_json(const ModelSpec& spec) {
  Json doc{{"kind", to_string(spec.kind)}};
  switch (spec.kind) {
    case ModelKind::cpd:
    case ModelKind::cpd_s: {
      const auto& c = spec.cp;
      doc["rank"] = c.rank;
      doc["learning_rate"] = c.learning_rate;
      doc["epochs"] = c.epochs;
      doc["batch_size"] = c.batch_size;
      doc["l2"] = c.l2;
      doc["smooth_lambda"] = c.smooth_lambda;
      doc["ordinal_modes"] = c.ordinal_modes ? Json(*c.ordinal_modes) : Json(nullptr);
      doc["init_scale"] = c.init_scale ? Json(*c.init_scale) : Json(nullptr);
      doc["patience"] = optional_json(c.patience);
      break;
    }
    case ModelKind::neat: {
      const auto& c = spec.neat;
      doc["components"] = c.components;
      doc["embed_dim"] = c.embed_dim;
      doc["hidden"] = c.hidden;
      doc["learning_rate"] = c.learning_rate;
      doc["epochs"] = c.epochs;
      doc["batch_size"] = c.batch_size;
      doc["l2"] = c.l2;
      doc["init_scale"] = c.init_scale;
      doc["patience"] = optional_json(c.patience);
      break;
    }
    case ModelKind::mlp: {
      const auto& c = spec.mlp;
      doc["hidden"] = c.hidden;
      doc["learning_rate"] = c.learning_rate;
      doc["epochs"] = c.epochs;
      doc["batch_size"] = c.batch_size;
      doc["l2"] = c.l2;
      doc["patience"] = optional_json(c.patience);
      break;
    }
  }
  doc["validation_fraction"] = spec.validation_fraction;
  return doc;
}

PlantedSpec planted_spec_from_json(const Json& doc) {
  const Fields f(doc, "synthetic",
                 {"dims", "kinds", "rank", "entries", "noise", "standardize", "seed"});
  PlantedSpec spec;
  if (f.has("dims")) spec.dims = f.sizes("dims");
  for (const auto& k : f.strings("kinds")) spec.kinds.push_back(mode_kind_from_string(k));
  spec.rank = f.size("rank", spec.rank);
  spec.entries = f.optional_size("entries");
  spec.noise = f.number("noise", spec.noise);
  spec.standardize = f.boolean("standardize", spec.standardize);
  spec.seed = f.size("seed", spec.seed);
  rethrow_as_config("synthetic", [&] { return spec.shape(); });
  if (spec.rank < 1) f.fail("rank must be at least 1");
  if (!(spec.noise >= 0.0)) f.fail("noise must be non-negative");
  return spec;
}

Json to_json(const PlantedSpec& spec) {
  Json kinds = Json::array();
  for (auto k : spec.shape().kinds) kinds.push_back(to_string(k));
  return Json{{"dims", spec.dims},
              {"kinds", kinds},
              {"rank", spec.rank},
              {"entries", optional_json(spec.entries)},
              {"noise", spec.noise},
              {"standardize", spec.standardize},
              {"seed", spec.seed}};
}

void RunConfig::validate() const {
  if (dataset.empty() == !synthetic.has_value()) {
    throw ConfigError("run: exactly one of 'dataset' and 'synthetic' is required");
  }
  if (models.empty()) throw ConfigError("run: at least one model is required");
  if (iterations < 1) throw ConfigError("run: iterations must be at least 1");
  std::set<ModelKind> kinds;
  for (const auto& m : models) {
    if (!kinds.insert(m.kind).second) {
      throw ConfigError(std::string("run: model kind '") + to_string(m.kind) + "' listed twice");
    }
  }
  for (const auto& name : external_baselines) {
    for (const auto& m : models) {
      if (name == to_string(m.kind)) throw ConfigError("run: external baseline '" + name + "' clashes with a model");
    }
  }
  for (auto size : sweep_sizes) {
    if (size == 0) throw ConfigError("run: sweep sizes must be positive");
  }
  if (flag_threshold && !(*flag_threshold >= 0.0)) {
    throw ConfigError("run: flag_threshold must be non-negative");
  }
}

RunConfig run_config_from_json(const Json& doc) {
  const Fields f(doc, "run",
                 {"dataset", "synthetic", "tensorize", "models", "train_count", "iterations",
                  "base_seed", "samples", "sweep_sizes", "external_baselines", "reference_mae",
                  "flag_threshold", "output_dir"});
  RunConfig c;
  c.dataset = f.string("dataset", "");
  if (f.has("synthetic")) c.synthetic = planted_spec_from_json(f.object("synthetic"));
  if (f.has("tensorize")) c.tensorize = tensorize_config_from_json(f.object("tensorize"));
  if (f.has("models")) {
    for (const auto& m : f.array("models")) c.models.push_back(model_spec_from_json(m));
  }
  c.train_count = f.size("train_count", c.train_count);
  c.iterations = f.size("iterations", c.iterations);
  c.base_seed = f.size("base_seed", c.base_seed);
  c.samples = f.size("samples", c.samples);
  c.sweep_sizes = f.sizes("sweep_sizes");
  c.external_baselines = f.strings("external_baselines");
  if (f.has("reference_mae")) {
    for (const auto& item : f.object("reference_mae").items()) {
      if (!item.value().is_number()) f.fail_key("reference_mae", "values must be numbers");
      c.reference_mae[item.key()] = item.value().get<double>();
    }
  }
  c.flag_threshold = f.optional_number("flag_threshold");
  c.output_dir = f.string("output_dir", c.output_dir);
  c.validate();
  return c;
}

Json to_json(const RunConfig& c) {
  Json models = Json::array();
  for (const auto& m : c.models) models.push_back(to_json(m));
  Json reference = Json::object();
  for (const auto& [k, v] : c.reference_mae) reference[k] = v;
  Json doc;
  if (c.synthetic) {
    doc["synthetic"] = to_json(*c.synthetic);
  } else {
    doc["dataset"] = c.dataset;
  }
  doc["tensorize"] = to_json(c.tensorize);
  doc["models"] = models;
  doc["train_count"] = c.train_count;
  doc["iterations"] = c.iterations;
  doc["base_seed"] = c.base_seed;
  doc["samples"] = c.samples;
  doc["sweep_sizes"] = c.sweep_sizes;
  doc["external_baselines"] = c.external_baselines;
  doc["reference_mae"] = reference;
  doc["flag_threshold"] = c.flag_threshold ? Json(*c.flag_threshold) : Json(nullptr);
  doc["output_dir"] = c.output_dir;
  return doc;
}

Json to_json(const SkipReport& r) {
  return Json{{"ingested", r.ingested},
              {"encoded", r.encoded},
              {"skipped",
               {{"parse_error", r.parse_error},
                {"wrong_arity", r.wrong_arity},
                {"count_overflow", r.count_overflow},
                {"noninteger_count", r.noninteger_count}}},
              {"dedup",
               {{"duplicate_coordinates", r.dedup.duplicate_coordinates},
                {"entries_removed", r.dedup.entries_removed}}}};
}

Json to_json(const TrainReport& r) {
  return Json{{"epochs_run", r.epochs_run},
              {"loss", r.loss},
              {"val_mae", r.val_mae},
              {"best_epoch", optional_json(r.best_epoch)},
              {"seconds", r.seconds},
              {"snapshot_id", r.snapshot_id}};
}

}  // namespace matten
