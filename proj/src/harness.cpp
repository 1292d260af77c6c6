// SPDX-License-Identifier: Apache-2.0
#include "matten/harness.hpp"

#include <filesystem>
#include <sstream>

#include "matten/error.hpp"
#include "matten/io.hpp"
#include "matten/synthetic.hpp"
#include "matten/tensorize.hpp"

namespace matten {

namespace fs = std::filesystem;

LoadedDataset load_dataset(const RunConfig& config) {
  config.validate();
  LoadedDataset out;
  if (config.synthetic) {
    out.tensor = make_planted_cp(*config.synthetic).observed;
    out.source = "synthetic";
    return out;
  }
  out.source = config.dataset;
  if (fs::path(config.dataset).extension() == ".csv") {
    const auto records = load_records_csv(config.dataset);
    auto result = tensorize(records, config.tensorize);
    out.tensor = std::move(result.tensor);
    out.skips = result.report;
  } else {
    out.tensor = load_tensor(config.dataset);
  }
  return out;
}

namespace {

ExperimentConfig experiment_config(const RunConfig& config) {
  ExperimentConfig ec;
  ec.train_count = config.train_count;
  ec.iterations = config.iterations;
  ec.base_seed = config.base_seed;
  ec.dedup_policy = config.tensorize.dedup_policy;
  return ec;
}

std::string config_line(const RunConfig& config) {
  return "# resolved-config: " + to_json(config).dump() + "\n";
}

template <typename T, typename Fn>
std::string join(const std::vector<T>& items, Fn&& fn) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ';';
    out += fn(items[i]);
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  return join(v, [](double x) { return format_double(x); });
}

std::string join_seeds(const std::vector<std::uint64_t>& v) {
  return join(v, [](std::uint64_t x) { return std::to_string(x); });
}

std::string output_path(const RunConfig& config, const char* name) {
  return (fs::path(config.output_dir) / name).string();
}

Json dataset_json(const LoadedDataset& data) {
  Json doc{{"source", data.source},
           {"entries", data.tensor.nnz()},
           {"shape", data.tensor.shape().dims},
           {"density", density(data.tensor)}};
  if (data.skips) doc["tensorize"] = to_json(*data.skips);
  return doc;
}

}  // namespace

Json to_json(const ResultRow& row) {
  Json iterations = Json::array();
  for (const auto& it : row.iterations) {
    iterations.push_back({{"iteration", it.iteration},
                          {"seed", it.seed},
                          {"mae", it.test.mae},
                          {"rmse", it.test.rmse},
                          {"count", it.test.count},
                          {"train_seconds", it.seconds},
                          {"snapshot_id", it.snapshot_id}});
  }
  return Json{{"model", row.model},
              {"train_count", row.train_count},
              {"test_count", row.test_count},
              {"dedup",
               {{"duplicate_coordinates", row.dedup.duplicate_coordinates},
                {"entries_removed", row.dedup.entries_removed}}},
              {"mean_mae", row.mean_mae},
              {"std_mae", row.std_mae},
              {"mean_rmse", row.mean_rmse},
              {"mean_train_seconds", row.mean_seconds},
              {"iterations", iterations}};
}

std::string results_csv(const RunConfig& config, const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << config_line(config);
  os << "model,status,iterations,train_count,test_count,mean_mae,std_mae,mean_rmse,"
        "mae_per_iteration,seeds,reference_mae,flagged,mean_train_seconds\n";
  for (const auto& row : rows) {
    const auto ref = config.reference_mae.find(row.model);
    os << row.model << ",ok," << row.iterations.size() << ',' << row.train_count << ','
       << row.test_count << ',' << format_double(row.mean_mae) << ','
       << format_double(row.std_mae) << ',' << format_double(row.mean_rmse) << ','
       << join_doubles(row.mae_values()) << ',' << join_seeds(row.seeds()) << ','
       << (ref != config.reference_mae.end() ? format_double(ref->second) : "") << ','
       << (config.flag_threshold ? (row.mean_mae > *config.flag_threshold ? "true" : "false")
                                 : "")
       << ',' << format_double(row.mean_seconds) << '\n';
  }
  for (const auto& name : config.external_baselines) {
    const auto ref = config.reference_mae.find(name);
    os << name << ",external,,,,,,,,,"
       << (ref != config.reference_mae.end() ? format_double(ref->second) : "") << ",,\n";
  }
  return os.str();
}

std::string samples_csv(const RunConfig& config, const std::vector<ModelSamples>& samples) {
  std::ostringstream os;
  os << config_line(config);
  os << "model,seed,label,actual,predicted\n";
  for (const auto& group : samples) {
    for (const auto& s : group.samples) {
      os << group.model << ',' << config.base_seed << ',' << s.label << ','
         << format_double(s.actual) << ',' << format_double(s.predicted) << '\n';
    }
  }
  return os.str();
}

std::string sweep_csv(const RunConfig& config, const std::vector<ModelSweep>& sweeps) {
  std::ostringstream os;
  os << config_line(config);
  os << "model,size,test_count,iterations,mean_mae,std_mae,mae_per_iteration,seeds,"
        "mean_train_seconds\n";
  for (const auto& sweep : sweeps) {
    for (const auto& r : sweep.rows) {
      os << sweep.model << ',' << r.size << ',' << r.result.test_count << ','
         << r.result.iterations.size() << ',' << format_double(r.result.mean_mae) << ','
         << format_double(r.result.std_mae) << ',' << join_doubles(r.result.mae_values())
         << ',' << join_seeds(r.result.seeds()) << ',' << format_double(r.result.mean_seconds)
         << '\n';
    }
  }
  return os.str();
}

BenchmarkResult run_benchmark(const RunConfig& config, const ProgressFn& progress) {
  if (config.train_count == 0) throw ConfigError("run: benchmark requires train_count");
  const auto data = load_dataset(config);
  const auto ec = experiment_config(config);

  BenchmarkResult out;
  Json results = Json::array();
  for (const auto& spec : config.models) {
    const std::string name = to_string(spec.kind);
    if (progress) progress("benchmark " + name);
    ModelSamples group{name, {}};
    auto observer = [&](const IterationResult& it, const TrainTestSplit& parts,
                        const Predictor& predictor) {
      if (progress) {
        progress("  " + name + " iteration " + std::to_string(it.iteration) +
                 " mae " + format_double(it.test.mae));
      }
      if (it.iteration != 0 || config.samples == 0) return;
      const auto k = std::min(config.samples, parts.test.nnz());
      group.samples = sample_predictions(predictor, parts.test, k, config.base_seed);
    };
    auto row = run_experiment(spec, data.tensor, ec, observer);
    results.push_back(to_json(row));
    out.rows.push_back(std::move(row));
    out.samples.push_back(std::move(group));
  }

  Json samples = Json::array();
  for (const auto& group : out.samples) {
    for (const auto& s : group.samples) {
      samples.push_back({{"model", group.model},
                         {"label", s.label},
                         {"coord", s.coord},
                         {"actual", s.actual},
                         {"predicted", s.predicted}});
    }
  }
  out.report = Json{{"config", to_json(config)},
                    {"dataset", dataset_json(data)},
                    {"results", results},
                    {"samples", samples}};

  const auto results_path = output_path(config, "results.csv");
  const auto samples_path = output_path(config, "samples.csv");
  const auto report_path = output_path(config, "report.json");
  write_file_atomic(results_path, results_csv(config, out.rows));
  write_file_atomic(samples_path, samples_csv(config, out.samples));
  write_file_atomic(report_path, out.report.dump(2) + "\n");
  out.files = {results_path, samples_path, report_path};
  return out;
}

SweepResult run_sweep(const RunConfig& config, const ProgressFn& progress) {
  if (config.sweep_sizes.empty()) throw ConfigError("run: sweep requires sweep_sizes");
  const auto data = load_dataset(config);
  const auto ec = experiment_config(config);

  SweepResult out;
  for (const auto& spec : config.models) {
    const std::string name = to_string(spec.kind);
    if (progress) progress("sweep " + name);
    auto rows = efficiency_sweep(spec, data.tensor, ec, config.sweep_sizes);
    if (progress) {
      for (const auto& r : rows) {
        progress("  " + name + " size " + std::to_string(r.size) + " mae " +
                 format_double(r.result.mean_mae));
      }
    }
    out.models.push_back({name, std::move(rows)});
  }
  const auto path = output_path(config, "sweep.csv");
  write_file_atomic(path, sweep_csv(config, out.models));
  out.files = {path};
  return out;
}

}  // namespace matten
