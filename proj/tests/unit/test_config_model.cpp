// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "matten/config.hpp"
#include "matten/error.hpp"
#include "matten/harness.hpp"
#include "matten/io.hpp"
#include "matten/model.hpp"
#include "matten/synthetic.hpp"
#include "matten/tensorize.hpp"

namespace matten {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("matten-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(ModelSpecJson, DefaultsPerKind) {
  const auto cpd = model_spec_from_json(parse_json(R"({"kind":"cpd"})"));
  EXPECT_EQ(cpd.kind, ModelKind::cpd);
  EXPECT_EQ(cpd.cp.smooth_lambda, 0.0);
  const auto cpd_s = model_spec_from_json(parse_json(R"({"kind":"cpd_s","rank":4})"));
  EXPECT_EQ(cpd_s.cp.rank, 4u);
  EXPECT_EQ(cpd_s.cp.smooth_lambda, kDefaultSmoothLambda);
  const auto mlp = model_spec_from_json(parse_json(R"({"kind":"mlp","hidden":[8,4]})"));
  EXPECT_EQ(mlp.mlp.hidden, (std::vector<std::size_t>{8, 4}));
}

TEST(ModelSpecJson, StrictKeysAndTypes) {
  EXPECT_THROW(model_spec_from_json(parse_json(R"({"kind":"cpd","rnak":3})")), ConfigError);
  EXPECT_THROW(model_spec_from_json(parse_json(R"({"kind":"cpd","rank":"3"})")), ConfigError);
  EXPECT_THROW(model_spec_from_json(parse_json(R"({"kind":"tucker"})")), ConfigError);
  EXPECT_THROW(model_spec_from_json(parse_json(R"({"kind":"neat","rank":3})")), ConfigError);
  EXPECT_THROW(model_spec_from_json(parse_json(R"({"kind":"cpd","rank":0})")), ConfigError);
  EXPECT_THROW(parse_json("{not json"), ConfigError);
}

TEST(ModelSpecJson, RoundTrip) {
  for (const char* text :
       {R"({"kind":"cpd","rank":5,"learning_rate":0.02,"patience":4,"init_scale":0.3})",
        R"({"kind":"cpd_s","smooth_lambda":0.5,"ordinal_modes":[2]})",
        R"({"kind":"neat","components":3,"embed_dim":2,"hidden":7,"epochs":9})",
        R"({"kind":"mlp","hidden":[5],"l2":0.0,"batch_size":17})"}) {
    const auto spec = model_spec_from_json(parse_json(text));
    const auto again = model_spec_from_json(to_json(spec));
    EXPECT_EQ(to_json(again), to_json(spec)) << text;
  }
}

TEST(TensorizeConfigJson, PoliciesAndStrictness) {
  const auto cfg = tensorize_config_from_json(
      parse_json(R"({"arity":3,"count_policy":"clip","dedup_policy":"first"})"));
  EXPECT_EQ(cfg.arity, 3u);
  EXPECT_EQ(cfg.count_policy, CountPolicy::clip);
  EXPECT_EQ(cfg.dedup_policy, DedupPolicy::first);
  EXPECT_THROW(tensorize_config_from_json(parse_json(R"({"count_policy":"wrap"})")), ConfigError);
  EXPECT_THROW(tensorize_config_from_json(parse_json(R"({"arty":2})")), ConfigError);
}

TEST(RunConfigJson, Validation) {
  const char* ok = R"({"synthetic":{"dims":[4,4,3,3],"entries":100},
                       "models":[{"kind":"cpd","rank":2}],"train_count":60})";
  EXPECT_NO_THROW(run_config_from_json(parse_json(ok)));
  // both sources, no source, no models, duplicate kinds, clashing baseline names
  EXPECT_THROW(run_config_from_json(parse_json(
                   R"({"dataset":"a.csv","synthetic":{},"models":[{"kind":"cpd"}],"train_count":1})")),
               ConfigError);
  EXPECT_THROW(run_config_from_json(parse_json(R"({"models":[{"kind":"cpd"}],"train_count":1})")),
               ConfigError);
  EXPECT_THROW(run_config_from_json(parse_json(R"({"dataset":"a.csv","models":[],"train_count":1})")),
               ConfigError);
  EXPECT_THROW(run_config_from_json(parse_json(
                   R"({"dataset":"a.csv","models":[{"kind":"cpd"},{"kind":"cpd"}],"train_count":1})")),
               ConfigError);
  EXPECT_THROW(run_config_from_json(parse_json(
                   R"({"dataset":"a.csv","models":[{"kind":"mlp"}],"external_baselines":["mlp"],"train_count":1})")),
               ConfigError);
  EXPECT_THROW(run_config_from_json(parse_json(
                   R"({"dataset":"a.csv","models":[{"kind":"mlp"}],"train_count":1,"iterations":0})")),
               ConfigError);
}

TEST(RunConfigJson, ShippedConfigsParse) {
  for (const char* name : {"task1.json", "task2.json", "task3.json", "task4.json", "synthetic.json"}) {
    const auto text = read_file(std::string(MATTEN_SOURCE_DIR) + "/configs/" + name);
    EXPECT_NO_THROW(run_config_from_json(parse_json(text))) << name;
  }
}

SparseTensor formula_tensor() {
  const std::vector<Record> records{{"AuBr5", 1.0}, {"NaCl", 2.0}, {"HCl", -0.5}, {"H2O", 0.4},
                                    {"AuCl3", 1.7}, {"NaBr", 0.9}, {"ClO2", 0.1}, {"Na2O", 2.2},
                                    {"HBr", -0.2}, {"AuH", 0.0}, {"BrCl", 0.6}, {"H2O2", 0.3}};
  return tensorize(records, {}).tensor;
}

class CheckpointRoundTrip : public ::testing::TestWithParam<const char*> {};

TEST_P(CheckpointRoundTrip, PredictionsAreBitIdentical) {
  const auto spec = model_spec_from_json(parse_json(GetParam()));
  const auto data = formula_tensor();
  const auto fit = fit_model(spec, data, 4);
  std::stringstream ss;
  write_model(ss, fit.model);
  const auto back = read_model(ss);
  EXPECT_EQ(back.kind(), spec.kind);
  EXPECT_EQ(back.seed(), 4u);
  EXPECT_EQ(back.labels().labels(0), data.index_map().labels(0));
  for (std::size_t e = 0; e < data.nnz(); ++e) {
    EXPECT_EQ(back.predict(data.coord(e)), fit.model.predict(data.coord(e)));
  }
  EXPECT_EQ(predict_formula(back, "AuBr5"), fit.model.predict(data.coord(0)));
  EXPECT_EQ(predict_formula(back, "Br5Au"), predict_formula(back, "AuBr5"));
  EXPECT_THROW(predict_formula(back, "Og5"), DatasetError);
  EXPECT_THROW(predict_formula(back, "AuFe"), DatasetError);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, CheckpointRoundTrip,
                         ::testing::Values(R"({"kind":"cpd","rank":2,"epochs":5})",
                                           R"({"kind":"cpd_s","rank":2,"epochs":5})",
                                           R"({"kind":"neat","components":2,"hidden":4,"epochs":5})",
                                           R"({"kind":"mlp","hidden":[6],"epochs":5})"));

TEST(Checkpoint, CorruptFilesAreDatasetErrors) {
  const auto fit = fit_model(model_spec_from_json(parse_json(R"({"kind":"cpd","rank":2,"epochs":1})")),
                             formula_tensor(), 0);
  std::stringstream ss;
  write_model(ss, fit.model);
  const auto text = ss.str();
  std::stringstream truncated(text.substr(0, text.size() - 10));
  EXPECT_THROW(read_model(truncated), DatasetError);
  std::stringstream wrong_magic("not-a-model 1\n");
  EXPECT_THROW(read_model(wrong_magic), DatasetError);
  EXPECT_THROW(load_model("/nonexistent/model.txt"), IoError);
}

TEST(Harness, BenchmarkWritesResultFiles) {
  const auto dir = scratch_dir("bench");
  auto config = run_config_from_json(parse_json(R"({
    "synthetic":{"dims":[5,5,4,4],"rank":2,"entries":200,"seed":3},
    "models":[{"kind":"cpd","rank":2,"epochs":3},{"kind":"mlp","hidden":[4],"epochs":2}],
    "train_count":120,"iterations":2,"samples":3,"external_baselines":["hgb"],
    "reference_mae":{"cpd":0.5},"flag_threshold":0.0})"));
  config.output_dir = dir.string();
  std::vector<std::string> lines;
  const auto result = run_benchmark(config, [&](const std::string& l) { lines.push_back(l); });
  EXPECT_FALSE(lines.empty());
  ASSERT_EQ(result.rows.size(), 2u);
  for (const char* f : {"results.csv", "samples.csv", "report.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto results = read_file((dir / "results.csv").string());
  EXPECT_EQ(results.rfind("# resolved-config: ", 0), 0u);
  EXPECT_NE(results.find("model,status,iterations,train_count,test_count,mean_mae"), std::string::npos);
  EXPECT_NE(results.find("\nhgb,external,"), std::string::npos);
  EXPECT_NE(results.find(",0.5,"), std::string::npos);
  const auto samples = read_file((dir / "samples.csv").string());
  std::size_t rows = 0;
  for (char c : samples) rows += c == '\n';
  EXPECT_EQ(rows, 2u + 2u * 3u);  // config line, header, 3 samples per model
  const auto report = parse_json(read_file((dir / "report.json").string()));
  EXPECT_GE(report.at("results").size(), 2u);
  EXPECT_EQ(report.at("samples").size(), 6u);
  fs::remove_all(dir);
}

TEST(Harness, SweepWritesOneRowPerModelAndSize) {
  const auto dir = scratch_dir("sweep");
  auto config = run_config_from_json(parse_json(R"({
    "synthetic":{"dims":[5,5,4,4],"rank":2,"entries":200,"seed":3},
    "models":[{"kind":"cpd","rank":2,"epochs":2}],
    "train_count":100,"iterations":1,"sweep_sizes":[80,40]})"));
  config.output_dir = dir.string();
  const auto result = run_sweep(config);
  const auto text = read_file((dir / "sweep.csv").string());
  EXPECT_NE(text.find("\ncpd,40,"), std::string::npos);
  EXPECT_LT(text.find("\ncpd,40,"), text.find("\ncpd,80,"));
  fs::remove_all(dir);
}

TEST(Harness, MissingDatasetIsIoError) {
  auto config = run_config_from_json(parse_json(
      R"({"dataset":"/nonexistent/data.csv","models":[{"kind":"cpd"}],"train_count":10})"));
  EXPECT_THROW(load_dataset(config), IoError);
}

}  // namespace
}  // namespace matten
