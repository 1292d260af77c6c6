// SPDX-License-Identifier: Apache-2.0
#include "matten/matten.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "matten/config.hpp"
#include "matten/error.hpp"
#include "matten/harness.hpp"
#include "matten/model.hpp"
#include "matten/synthetic.hpp"
#include "matten/tensorize.hpp"

struct matten_tensor {
  matten::SparseTensor tensor;
};

struct matten_model {
  matten::TrainedModel model;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_error_json;

matten_status status_of(matten::ErrorKind kind) {
  using matten::ErrorKind;
  switch (kind) {
    case ErrorKind::config: return MATTEN_ERR_CONFIG;
    case ErrorKind::dataset: return MATTEN_ERR_DATASET;
    case ErrorKind::divergence: return MATTEN_ERR_DIVERGENCE;
    case ErrorKind::parse: return MATTEN_ERR_PARSE;
    case ErrorKind::bounds: return MATTEN_ERR_BOUNDS;
    case ErrorKind::state: return MATTEN_ERR_STATE;
    case ErrorKind::shape: return MATTEN_ERR_SHAPE;
    case ErrorKind::argument: return MATTEN_ERR_ARGUMENT;
    case ErrorKind::io: return MATTEN_ERR_IO;
  }
  return MATTEN_ERR_INTERNAL;
}

void set_error(const char* kind, const std::string& message, matten::Json extra = {}) {
  last_error = message;
  matten::Json doc{{"error", kind}, {"message", message}};
  if (extra.is_object()) {
    for (auto& item : extra.items()) doc[item.key()] = item.value();
  }
  last_error_json = doc.dump(-1, ' ', false, matten::Json::error_handler_t::replace);
}

void clear_error() {
  last_error.clear();
  last_error_json.clear();
}

template <typename Fn>
matten_status guarded(Fn&& fn) {
  try {
    fn();
    clear_error();
    return MATTEN_OK;
  } catch (const matten::DivergenceError& e) {
    set_error("divergence", e.what(),
              {{"epoch", e.epoch()}, {"learning_rate", e.learning_rate()}});
    return MATTEN_ERR_DIVERGENCE;
  } catch (const matten::ParseError& e) {
    set_error("parse", e.what(), {{"offset", e.offset()}});
    return MATTEN_ERR_PARSE;
  } catch (const matten::BoundsError& e) {
    set_error("bounds", e.what(), {{"mode", e.mode()}});
    return MATTEN_ERR_BOUNDS;
  } catch (const matten::Error& e) {
    set_error(matten::to_string(e.kind()), e.what());
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    set_error("internal", "out of memory");
    return MATTEN_ERR_INTERNAL;
  } catch (const std::exception& e) {
    set_error("internal", e.what());
    return MATTEN_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& text) {
  auto* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

void require(const void* p, const char* name) {
  if (!p) throw matten::ArgumentError(std::string(name) + " must not be NULL");
}

matten::Json parse_optional(const char* text) {
  if (!text || !*text) return matten::Json::object();
  return matten::parse_json(text);
}

}  // namespace

extern "C" {

const char* matten_version(void) { return MATTEN_VERSION; }

const char* matten_status_name(matten_status status) {
  switch (status) {
    case MATTEN_OK: return "ok";
    case MATTEN_ERR_INTERNAL: return "internal";
    case MATTEN_ERR_CONFIG: return "config";
    case MATTEN_ERR_DATASET: return "dataset";
    case MATTEN_ERR_DIVERGENCE: return "divergence";
    case MATTEN_ERR_PARSE: return "parse";
    case MATTEN_ERR_BOUNDS: return "bounds";
    case MATTEN_ERR_STATE: return "state";
    case MATTEN_ERR_SHAPE: return "shape";
    case MATTEN_ERR_ARGUMENT: return "argument";
    case MATTEN_ERR_IO: return "io";
  }
  return "unknown";
}

const char* matten_last_error(void) { return last_error.c_str(); }

const char* matten_last_error_json(void) { return last_error_json.c_str(); }

void matten_string_free(char* text) { std::free(text); }

matten_status matten_tensorize_csv(const char* csv_path, const char* config_json,
                                   matten_tensor** out, char** report_json) {
  return guarded([&] {
    require(csv_path, "csv_path");
    require(out, "out");
    const auto config = matten::tensorize_config_from_json(parse_optional(config_json));
    const auto records = matten::load_records_csv(csv_path);
    auto result = matten::tensorize(records, config);
    char* report = nullptr;
    if (report_json) {
      matten::Json doc = matten::to_json(result.report);
      doc["config"] = matten::to_json(config);
      doc["shape"] = result.tensor.shape().dims;
      doc["density"] = matten::density(result.tensor);
      report = dup_string(doc.dump());
    }
    *out = new matten_tensor{std::move(result.tensor)};
    if (report_json) *report_json = report;
  });
}

matten_status matten_tensor_load(const char* path, matten_tensor** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new matten_tensor{matten::load_tensor(path)};
  });
}

matten_status matten_tensor_save(const matten_tensor* tensor, const char* path,
                                 const char* meta) {
  return guarded([&] {
    require(tensor, "tensor");
    require(path, "path");
    matten::save_tensor(path, tensor->tensor, meta ? meta : "");
  });
}

matten_status matten_tensor_info(const matten_tensor* tensor, char** info_json) {
  return guarded([&] {
    require(tensor, "tensor");
    require(info_json, "info_json");
    const auto& t = tensor->tensor;
    matten::Json kinds = matten::Json::array();
    matten::Json labels = matten::Json::array();
    for (std::size_t n = 0; n < t.order(); ++n) {
      kinds.push_back(matten::to_string(t.shape().kinds[n]));
      labels.push_back(t.index_map().labels(n));
    }
    matten::Json doc{{"shape", t.shape().dims},
                     {"kinds", kinds},
                     {"labels", labels},
                     {"entries", t.nnz()},
                     {"density", matten::density(t)}};
    *info_json = dup_string(doc.dump());
  });
}

size_t matten_tensor_nnz(const matten_tensor* tensor) {
  return tensor ? tensor->tensor.nnz() : 0;
}

void matten_tensor_free(matten_tensor* tensor) { delete tensor; }

matten_status matten_synthetic(const char* spec_json, matten_tensor** out) {
  return guarded([&] {
    require(out, "out");
    const auto spec = matten::planted_spec_from_json(parse_optional(spec_json));
    *out = new matten_tensor{matten::make_planted_cp(spec).observed};
  });
}

matten_status matten_train(const matten_tensor* tensor, const char* model_json, uint64_t seed,
                           matten_model** out, char** report_json) {
  return guarded([&] {
    require(tensor, "tensor");
    require(model_json, "model_json");
    require(out, "out");
    const auto spec = matten::model_spec_from_json(matten::parse_json(model_json));
    auto [clean, dedup_report] = matten::dedup(tensor->tensor);
    auto fit = matten::fit_model(spec, clean, seed);
    char* report = nullptr;
    if (report_json) {
      matten::Json doc = matten::to_json(fit.report);
      doc["model"] = matten::to_json(spec);
      doc["seed"] = seed;
      doc["train_entries"] = clean.nnz();
      doc["dedup"] = {{"duplicate_coordinates", dedup_report.duplicate_coordinates},
                      {"entries_removed", dedup_report.entries_removed}};
      report = dup_string(doc.dump());
    }
    *out = new matten_model{std::move(fit.model)};
    if (report_json) *report_json = report;
  });
}

matten_status matten_model_save(const matten_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    matten::save_model(path, model->model);
  });
}

matten_status matten_model_load(const char* path, matten_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new matten_model{matten::load_model(path)};
  });
}

matten_status matten_model_predict_coord(const matten_model* model, const uint32_t* coord,
                                         size_t order, double* out) {
  return guarded([&] {
    require(model, "model");
    require(coord, "coord");
    require(out, "out");
    if (order != model->model.shape().order()) {
      throw matten::ShapeError("coordinate has " + std::to_string(order) + " modes, model has " +
                               std::to_string(model->model.shape().order()));
    }
    *out = model->model.predict(matten::CoordView(coord, order));
  });
}

matten_status matten_model_predict_formula(const matten_model* model, const char* formula,
                                           double* out) {
  return guarded([&] {
    require(model, "model");
    require(formula, "formula");
    require(out, "out");
    *out = matten::predict_formula(model->model, formula);
  });
}

void matten_model_free(matten_model* model) { delete model; }

matten_status matten_benchmark(const char* run_json, matten_progress_fn progress, void* user,
                               char** report_json) {
  return guarded([&] {
    require(run_json, "run_json");
    const auto config = matten::run_config_from_json(matten::parse_json(run_json));
    matten::ProgressFn fn;
    if (progress) fn = [&](const std::string& line) { progress(line.c_str(), user); };
    const auto result = matten::run_benchmark(config, fn);
    if (report_json) *report_json = dup_string(result.report.dump());
  });
}

matten_status matten_sweep(const char* run_json, matten_progress_fn progress, void* user) {
  return guarded([&] {
    require(run_json, "run_json");
    const auto config = matten::run_config_from_json(matten::parse_json(run_json));
    matten::ProgressFn fn;
    if (progress) fn = [&](const std::string& line) { progress(line.c_str(), user); };
    matten::run_sweep(config, fn);
  });
}

}  // extern "C"
