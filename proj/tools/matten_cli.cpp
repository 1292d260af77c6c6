// SPDX-License-Identifier: Apache-2.0
// Command-line front end. Talks to the library only through matten.h.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "matten/matten.h"

namespace {

using Json = nlohmann::ordered_json;

// Exit codes: 2 bad config, 3 dataset problems, 4 divergence, 1 anything else.
int exit_code(matten_status status) {
  switch (status) {
    case MATTEN_OK: return 0;
    case MATTEN_ERR_CONFIG: return 2;
    case MATTEN_ERR_DATASET:
    case MATTEN_ERR_PARSE:
    case MATTEN_ERR_IO: return 3;
    case MATTEN_ERR_DIVERGENCE: return 4;
    default: return 1;
  }
}

struct Failure {
  int code;
};

void check(matten_status status) {
  if (status == MATTEN_OK) return;
  std::cerr << matten_last_error_json() << std::endl;
  throw Failure{exit_code(status)};
}

[[noreturn]] void fail(const char* kind, const std::string& message, int code) {
  const Json doc{{"error", kind}, {"message", message}};
  std::cerr << doc.dump(-1, ' ', false, Json::error_handler_t::replace) << std::endl;
  throw Failure{code};
}

std::string read_text(const std::string& path, const char* kind, int code) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(kind, "cannot open '" + path + "'", code);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Json parse_config(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    fail("config", origin + ": invalid JSON: " + e.what(), 2);
  }
}

std::string take(char* text) {
  std::string out = text ? text : "";
  matten_string_free(text);
  return out;
}

void print_progress(const char* line, void*) { std::cerr << line << '\n'; }

struct TensorHandle {
  matten_tensor* p = nullptr;
  ~TensorHandle() { matten_tensor_free(p); }
};

struct ModelHandle {
  matten_model* p = nullptr;
  ~ModelHandle() { matten_model_free(p); }
};

std::vector<std::size_t> parse_list(const std::string& text, const char* flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      fail("config", std::string(flag) + ": '" + item + "' is not a non-negative integer", 2);
    }
  }
  return out;
}

// tensorize -----------------------------------------------------------------

struct TensorizeArgs {
  std::string input;
  std::string output;
  std::string report;
  std::string config;
  std::optional<std::size_t> arity, max_count;
  std::optional<std::string> count_policy, noninteger_policy, dedup_policy;
  bool no_validate_symbols = false;
};

Json tensorize_json(const TensorizeArgs& a) {
  Json doc = a.config.empty() ? Json::object()
                              : parse_config(read_text(a.config, "config", 2), a.config);
  if (!doc.is_object()) fail("config", a.config + ": expected a JSON object", 2);
  if (a.arity) doc["arity"] = *a.arity;
  if (a.max_count) doc["max_count"] = *a.max_count;
  if (a.count_policy) doc["count_policy"] = *a.count_policy;
  if (a.noninteger_policy) doc["noninteger_policy"] = *a.noninteger_policy;
  if (a.dedup_policy) doc["dedup_policy"] = *a.dedup_policy;
  if (a.no_validate_symbols) doc["validate_symbols"] = false;
  return doc;
}

void run_tensorize(const TensorizeArgs& a) {
  const auto config = tensorize_json(a).dump();
  TensorHandle t;
  char* report = nullptr;
  check(matten_tensorize_csv(a.input.c_str(), config.c_str(), &t.p, &report));
  const auto text = take(report);
  check(matten_tensor_save(t.p, a.output.c_str(), text.c_str()));
  if (!a.report.empty()) {
    std::ofstream out(a.report);
    if (!(out << Json::parse(text).dump(2) << '\n')) {
      fail("io", "cannot write '" + a.report + "'", 3);
    }
  }
  std::cout << Json::parse(text).dump(2) << std::endl;
}

// train ---------------------------------------------------------------------

struct TrainArgs {
  std::string tensor;
  std::string output;
  std::string model_config;
  std::string kind = "cpd";
  std::uint64_t seed = 0;
  std::optional<std::size_t> rank, components, embed_dim, epochs, batch_size, patience;
  std::optional<double> learning_rate, l2, smooth_lambda, init_scale;
  std::optional<std::string> hidden;
};

Json model_json(const TrainArgs& a) {
  Json doc = a.model_config.empty()
                 ? Json{{"kind", a.kind}}
                 : parse_config(read_text(a.model_config, "config", 2), a.model_config);
  if (!doc.is_object()) fail("config", a.model_config + ": expected a JSON object", 2);
  if (!doc.contains("kind")) doc["kind"] = a.kind;
  if (a.rank) doc["rank"] = *a.rank;
  if (a.components) doc["components"] = *a.components;
  if (a.embed_dim) doc["embed_dim"] = *a.embed_dim;
  if (a.epochs) doc["epochs"] = *a.epochs;
  if (a.batch_size) doc["batch_size"] = *a.batch_size;
  if (a.patience) doc["patience"] = *a.patience;
  if (a.learning_rate) doc["learning_rate"] = *a.learning_rate;
  if (a.l2) doc["l2"] = *a.l2;
  if (a.smooth_lambda) doc["smooth_lambda"] = *a.smooth_lambda;
  if (a.init_scale) doc["init_scale"] = *a.init_scale;
  if (a.hidden) {
    const auto widths = parse_list(*a.hidden, "--hidden");
    if (doc["kind"] == "mlp") {
      doc["hidden"] = widths;
    } else if (widths.size() == 1) {
      doc["hidden"] = widths[0];
    } else {
      fail("config", "--hidden takes a single width for this model kind", 2);
    }
  }
  return doc;
}

void run_train(const TrainArgs& a) {
  TensorHandle t;
  const bool csv = a.tensor.size() >= 4 && a.tensor.compare(a.tensor.size() - 4, 4, ".csv") == 0;
  if (csv) {
    check(matten_tensorize_csv(a.tensor.c_str(), nullptr, &t.p, nullptr));
  } else {
    check(matten_tensor_load(a.tensor.c_str(), &t.p));
  }
  const auto spec = model_json(a).dump();
  ModelHandle m;
  char* report = nullptr;
  check(matten_train(t.p, spec.c_str(), a.seed, &m.p, &report));
  const auto text = take(report);
  check(matten_model_save(m.p, a.output.c_str()));
  std::cout << Json::parse(text).dump(2) << std::endl;
}

// predict -------------------------------------------------------------------

struct PredictArgs {
  std::string checkpoint;
  std::vector<std::string> formulas;
  std::string coord;
};

void run_predict(const PredictArgs& a) {
  ModelHandle m;
  check(matten_model_load(a.checkpoint.c_str(), &m.p));
  char buf[64];
  if (!a.coord.empty()) {
    const auto wide = parse_list(a.coord, "--coord");
    std::vector<std::uint32_t> coord(wide.begin(), wide.end());
    double value = 0.0;
    check(matten_model_predict_coord(m.p, coord.data(), coord.size(), &value));
    std::snprintf(buf, sizeof buf, "%.17g", value);
    std::cout << buf << '\n';
  }
  for (const auto& f : a.formulas) {
    double value = 0.0;
    check(matten_model_predict_formula(m.p, f.c_str(), &value));
    std::snprintf(buf, sizeof buf, "%.17g", value);
    if (a.formulas.size() > 1) std::cout << f << ' ';
    std::cout << buf << '\n';
  }
}

// benchmark / sweep / synth -------------------------------------------------

struct RunArgs {
  std::string config;
  std::string output_dir;
  std::string sizes;
  std::optional<std::size_t> iterations;
  std::optional<std::uint64_t> base_seed;
  bool quiet = false;
};

std::string run_json(const RunArgs& a) {
  Json doc = parse_config(read_text(a.config, "config", 2), a.config);
  if (!doc.is_object()) fail("config", a.config + ": expected a JSON object", 2);
  if (!a.output_dir.empty()) doc["output_dir"] = a.output_dir;
  if (!a.sizes.empty()) doc["sweep_sizes"] = parse_list(a.sizes, "--sizes");
  if (a.iterations) doc["iterations"] = *a.iterations;
  if (a.base_seed) doc["base_seed"] = *a.base_seed;
  return doc.dump();
}

void run_benchmark(const RunArgs& a) {
  const auto doc = run_json(a);
  char* report = nullptr;
  check(matten_benchmark(doc.c_str(), a.quiet ? nullptr : print_progress, nullptr, &report));
  const auto parsed = Json::parse(take(report));
  Json summary = Json::array();
  for (const auto& row : parsed["results"]) {
    summary.push_back({{"model", row["model"]},
                       {"mean_mae", row["mean_mae"]},
                       {"std_mae", row["std_mae"]}});
  }
  std::cout << summary.dump(2) << std::endl;
}

void run_sweep(const RunArgs& a) {
  const auto doc = run_json(a);
  check(matten_sweep(doc.c_str(), a.quiet ? nullptr : print_progress, nullptr));
}

struct SynthArgs {
  std::string spec;
  std::string output;
  std::string dims;
  std::optional<std::size_t> rank, entries;
  std::optional<double> noise;
  std::optional<std::uint64_t> seed;
};

void run_synth(const SynthArgs& a) {
  Json doc = a.spec.empty() ? Json::object() : parse_config(read_text(a.spec, "config", 2), a.spec);
  if (!doc.is_object()) fail("config", a.spec + ": expected a JSON object", 2);
  if (!a.dims.empty()) doc["dims"] = parse_list(a.dims, "--dims");
  if (a.rank) doc["rank"] = *a.rank;
  if (a.entries) doc["entries"] = *a.entries;
  if (a.noise) doc["noise"] = *a.noise;
  if (a.seed) doc["seed"] = *a.seed;
  const auto text = doc.dump();
  TensorHandle t;
  check(matten_synthetic(text.c_str(), &t.p));
  check(matten_tensor_save(t.p, a.output.c_str(), text.c_str()));
  char* info = nullptr;
  check(matten_tensor_info(t.p, &info));
  auto parsed = Json::parse(take(info));
  parsed.erase("labels");
  std::cout << parsed.dump(2) << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse tensor completion for composition-property datasets"};
  app.set_version_flag("--version", std::string(matten_version()));
  app.require_subcommand(1);

  TensorizeArgs ta;
  auto* tz = app.add_subcommand("tensorize", "Encode a formula,value CSV as a sparse tensor");
  tz->add_option("input", ta.input, "Input CSV with header formula,value")->required();
  tz->add_option("-o,--output", ta.output, "Tensor file to write")->required();
  tz->add_option("--report", ta.report, "Also write the skip report to this file");
  tz->add_option("--config", ta.config, "Tensorize config JSON file");
  tz->add_option("--arity", ta.arity, "Distinct elements per formula");
  tz->add_option("--max-count", ta.max_count, "Largest atom count");
  tz->add_option("--count-policy", ta.count_policy, "skip or clip");
  tz->add_option("--noninteger-policy", ta.noninteger_policy, "skip or round");
  tz->add_option("--dedup-policy", ta.dedup_policy, "mean, first or drop_all");
  tz->add_flag("--no-validate-symbols", ta.no_validate_symbols, "Accept unknown element symbols");

  TrainArgs tr;
  auto* trc = app.add_subcommand("train", "Train a model on a tensor file (or CSV)");
  trc->add_option("tensor", tr.tensor, "Tensor file, or a CSV tensorized with defaults")->required();
  trc->add_option("-o,--output", tr.output, "Checkpoint to write")->required();
  trc->add_option("--model-config", tr.model_config, "Model config JSON file");
  trc->add_option("--kind", tr.kind, "cpd, cpd_s, neat or mlp")->capture_default_str();
  trc->add_option("--seed", tr.seed, "Seed for initialization and shuffling")->capture_default_str();
  trc->add_option("--rank", tr.rank);
  trc->add_option("--components", tr.components);
  trc->add_option("--embed-dim", tr.embed_dim);
  trc->add_option("--hidden", tr.hidden, "Hidden width; comma list for mlp");
  trc->add_option("--epochs", tr.epochs);
  trc->add_option("--batch-size", tr.batch_size);
  trc->add_option("--patience", tr.patience);
  trc->add_option("--lr", tr.learning_rate);
  trc->add_option("--l2", tr.l2);
  trc->add_option("--smooth-lambda", tr.smooth_lambda);
  trc->add_option("--init-scale", tr.init_scale);

  PredictArgs pr;
  auto* prc = app.add_subcommand("predict", "Predict formulas or coordinates with a checkpoint");
  prc->add_option("checkpoint", pr.checkpoint, "Checkpoint file")->required();
  prc->add_option("formulas", pr.formulas, "Formulas such as AuBr5");
  prc->add_option("--coord", pr.coord, "Comma separated coordinate");

  RunArgs br;
  auto* bmc = app.add_subcommand("benchmark", "Repeated-split evaluation from a run config");
  bmc->add_option("config", br.config, "Run config JSON file")->required();
  bmc->add_option("--output-dir", br.output_dir, "Override output_dir");
  bmc->add_option("--iterations", br.iterations, "Override iterations");
  bmc->add_option("--base-seed", br.base_seed, "Override base_seed");
  bmc->add_flag("-q,--quiet", br.quiet, "No progress on stderr");

  RunArgs sr;
  auto* swc = app.add_subcommand("sweep", "MAE and train time against train size");
  swc->add_option("config", sr.config, "Run config JSON file")->required();
  swc->add_option("--sizes", sr.sizes, "Comma separated train sizes");
  swc->add_option("--output-dir", sr.output_dir, "Override output_dir");
  swc->add_option("--iterations", sr.iterations, "Override iterations");
  swc->add_option("--base-seed", sr.base_seed, "Override base_seed");
  swc->add_flag("-q,--quiet", sr.quiet, "No progress on stderr");

  SynthArgs sy;
  auto* syc = app.add_subcommand("synth", "Write a planted low-rank tensor");
  syc->add_option("-o,--output", sy.output, "Tensor file to write")->required();
  syc->add_option("--spec", sy.spec, "Synthetic spec JSON file");
  syc->add_option("--dims", sy.dims, "Comma separated extents");
  syc->add_option("--rank", sy.rank);
  syc->add_option("--entries", sy.entries);
  syc->add_option("--noise", sy.noise);
  syc->add_option("--seed", sy.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << Json{{"error", "config"}, {"message", e.what()}}.dump() << std::endl;
    return 2;
  }

  try {
    if (tz->parsed()) run_tensorize(ta);
    if (trc->parsed()) run_train(tr);
    if (prc->parsed()) {
      if (pr.formulas.empty() && pr.coord.empty()) {
        fail("config", "predict needs a formula or --coord", 2);
      }
      run_predict(pr);
    }
    if (bmc->parsed()) run_benchmark(br);
    if (swc->parsed()) run_sweep(sr);
    if (syc->parsed()) run_synth(sy);
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
