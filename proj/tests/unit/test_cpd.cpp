// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "matten/cpd.hpp"
#include "matten/error.hpp"
#include "matten/synthetic.hpp"
#include "support/oracles.hpp"

namespace matten {
namespace {

Shape elements(std::vector<std::size_t> dims) {
  return Shape(dims, std::vector<ModeKind>(dims.size(), ModeKind::element));
}

Shape formula_shape(std::size_t elements, std::size_t counts) {
  return Shape({elements, elements, counts, counts},
               {ModeKind::element, ModeKind::element, ModeKind::count, ModeKind::count});
}

// Dense tensor holding every cell of a planted model.
SparseTensor full_tensor(const Shape& shape, const std::function<double(CoordView)>& f) {
  SparseTensor t(shape);
  Coord c(shape.order(), 0);
  for (;;) {
    t.insert(c, f(c));
    std::size_t n = 0;
    while (n < c.size() && ++c[n] == shape.dims[n]) c[n++] = 0;
    if (n == c.size()) break;
  }
  return t;
}

std::vector<std::size_t> all_entries(const SparseTensor& t) {
  std::vector<std::size_t> out(t.nnz());
  std::iota(out.begin(), out.end(), 0);
  return out;
}

TEST(CpPredict, HandComputedRankTwo) {
  Matrix a(2, 2), b(3, 2);
  a(1, 0) = 2.0;
  a(1, 1) = -1.0;
  b(2, 0) = 0.5;
  b(2, 1) = 4.0;
  CPModel model(elements({2, 3}), {a, b});
  const Coord c{1, 2};
  EXPECT_DOUBLE_EQ(predict_raw(model, c), 2.0 * 0.5 + -1.0 * 4.0);
  EXPECT_THROW(predict(model, c), StateError);
  model.bind_stats({10.0, 2.0});
  EXPECT_DOUBLE_EQ(predict(model, c), 10.0 + 2.0 * -3.0);
}

TEST(CpPenalty, HandComputed) {
  Matrix rows(3, 2);
  rows(0, 0) = 0.0; rows(0, 1) = 1.0;
  rows(1, 0) = 1.0; rows(1, 1) = 1.0;
  rows(2, 0) = 1.0; rows(2, 1) = 3.0;
  CPModel model(elements({3, 3}), {rows, rows});
  const std::vector<std::size_t> one{0};
  // |(1,0)|^2 + |(0,2)|^2 = 1 + 4.
  EXPECT_DOUBLE_EQ(smoothness_penalty(model, one), 5.0);
  const std::vector<std::size_t> both{0, 1};
  EXPECT_DOUBLE_EQ(smoothness_penalty(model, both), 10.0);
  EXPECT_DOUBLE_EQ(smoothness_penalty(model, {}), 0.0);
}

TEST(CpPenaltyProperty, InvariantToConstantRowShift) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    CPTrainConfig cfg;
    cfg.rank = 3;
    cfg.seed = static_cast<std::uint64_t>(trial);
    auto model = init_model(formula_shape(4, 6), cfg);
    const std::vector<std::size_t> modes{2, 3};
    const double before = smoothness_penalty(model, modes);
    for (std::size_t r = 0; r < 3; ++r) {
      const double shift = rng.uniform(-5.0, 5.0);
      auto& f = model.mutable_factors()[2];
      for (std::size_t i = 0; i < f.rows(); ++i) f(i, r) += shift;
    }
    EXPECT_NEAR(smoothness_penalty(model, modes), before, 1e-9 * std::max(1.0, before));
  }
}

TEST(CpConfig, DefaultsAndValidation) {
  CPTrainConfig cfg;
  cfg.rank = 3;
  EXPECT_NEAR(cfg.resolved_init_scale(4), std::sqrt(3.0) * std::pow(0.1 / 3.0, 1.0 / 8.0), 1e-15);
  cfg.init_scale = 0.2;
  EXPECT_EQ(cfg.resolved_init_scale(4), 0.2);
  EXPECT_EQ(cfg.resolved_ordinal_modes(formula_shape(3, 4)), (std::vector<std::size_t>{2, 3}));

  CPTrainConfig bad;
  bad.rank = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.learning_rate = -1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.ordinal_modes = std::vector<std::size_t>{7};
  const auto shape = formula_shape(3, 4);
  EXPECT_THROW(bad.validate(&shape), ConfigError);
}

TEST(CpInit, UniformWithinScale) {
  CPTrainConfig cfg;
  cfg.rank = 4;
  cfg.init_scale = 0.25;
  cfg.seed = 9;
  const auto model = init_model(elements({5, 6, 7}), cfg);
  ASSERT_EQ(model.factors().size(), 3u);
  EXPECT_EQ(model.factors()[2].rows(), 7u);
  EXPECT_EQ(model.rank(), 4u);
  for (const auto& f : model.factors()) {
    for (double v : f.values()) EXPECT_LE(std::abs(v), 0.25);
  }
  EXPECT_EQ(init_model(elements({5, 6, 7}), cfg), model);
}

TEST(CpObjective, GradientMatchesFiniteDifferences) {
  const Shape shape({4, 3, 5}, {ModeKind::element, ModeKind::count, ModeKind::count});
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    CPTrainConfig cfg;
    cfg.rank = 2;
    cfg.seed = seed;
    cfg.init_scale = 0.8;
    cfg.l2 = 0.03;
    cfg.smooth_lambda = 0.2;
    auto model = init_model(shape, cfg);
    Rng rng(seed + 100);
    SparseTensor data(shape);
    for (Index i = 0; i < 4; ++i)
      for (Index k = 0; k < 5; k += 2) data.insert(Coord{i, static_cast<Index>(i % 3), k}, rng.uniform(-2, 2));
    model.bind_stats({0.3, 1.7});
    const std::vector<std::size_t> entries{0, 2, 3, 5, 7, 11};

    std::vector<Matrix> grad;
    cp_objective(model, data, entries, cfg, &grad);
    std::vector<std::span<double>> params;
    std::vector<std::span<const double>> analytic;
    for (std::size_t n = 0; n < shape.order(); ++n) {
      params.push_back(model.mutable_factors()[n].values());
      analytic.push_back(grad[n].values());
    }
    const auto worst = testing::worst_fd_mismatch(
        params, analytic, [&] { return cp_objective(model, data, entries, cfg, nullptr); });
    EXPECT_LT(worst.error, testing::kFdTolerance)
        << "mode " << worst.block << " index " << worst.index << " analytic " << worst.analytic
        << " numeric " << worst.numeric;
  }
}

TEST(CpObjective, HandComputedSingleEntry) {
  Matrix a(1, 1, 2.0), b(1, 1, 3.0);
  CPModel model(elements({1, 1}), {a, b});
  model.bind_stats({1.0, 2.0});
  SparseTensor data(elements({1, 1}));
  data.insert(Coord{0, 0}, 5.0);  // standardized target 2
  CPTrainConfig cfg;
  cfg.rank = 1;
  cfg.l2 = 0.5;
  const std::vector<std::size_t> e{0};
  // (6 - 2)^2 + 0.5 * (4 + 9)
  EXPECT_DOUBLE_EQ(cp_objective(model, data, e, cfg, nullptr), 16.0 + 6.5);
}

TEST(CpTrain, RecoversExactRankOneTensor) {
  const Shape shape = elements({4, 5, 3});
  // u sums to zero, so the tensor mean is zero and z-scoring keeps it rank 1.
  const std::vector<double> u{1.0, -0.5, 0.8, -1.3}, v{0.6, 1.2, -1.0, 0.4, 0.9},
      w{1.1, 0.7, -0.6};
  const auto data = full_tensor(shape, [&](CoordView c) { return u[c[0]] * v[c[1]] * w[c[2]]; });
  CPTrainConfig cfg;
  cfg.rank = 1;
  cfg.epochs = 3000;
  cfg.batch_size = 60;
  cfg.learning_rate = 0.01;
  cfg.l2 = 0.0;
  cfg.seed = 3;
  const auto fit = cp_train(init_model(shape, cfg), data, cfg);
  const double mae = tensor_mae(data, [&](CoordView c) { return predict(fit.model, c); });
  const double spread = value_stats(data.values()).std;
  EXPECT_LT(mae, 0.01 * spread);
  EXPECT_EQ(fit.report.epochs_run, 3000u);
  EXPECT_LT(fit.report.loss.back(), fit.report.loss.front());
}

TEST(CpTrain, LargeSmoothnessWeightFlattensCountFactors) {
  PlantedSpec spec;
  spec.dims = {6, 6, 6, 6};
  spec.rank = 2;
  spec.entries = 600;
  spec.seed = 4;
  const auto planted = make_planted_cp(spec);
  CPTrainConfig cfg;
  cfg.rank = 2;
  cfg.epochs = 100;
  cfg.batch_size = 64;
  cfg.seed = 1;
  const auto plain = cp_train(init_model(planted.observed.shape(), cfg), planted.observed, cfg);
  auto smooth_cfg = cfg;
  smooth_cfg.smooth_lambda = 1e6;
  const auto smooth =
      cp_train(init_model(planted.observed.shape(), smooth_cfg), planted.observed, smooth_cfg);
  const auto modes = cfg.resolved_ordinal_modes(planted.observed.shape());
  EXPECT_LT(smoothness_penalty(smooth.model, modes), 0.01 * smoothness_penalty(plain.model, modes));
}

TEST(CpTrain, ZeroEpochsBindsStatsOnly) {
  SparseTensor data(elements({2, 2}));
  data.insert(Coord{0, 0}, 1.0);
  data.insert(Coord{1, 1}, 3.0);
  CPTrainConfig cfg;
  cfg.rank = 2;
  cfg.epochs = 0;
  const auto init = init_model(data.shape(), cfg);
  const auto fit = cp_train(init, data, cfg);
  EXPECT_EQ(fit.model.factors(), init.factors());
  EXPECT_TRUE(fit.model.stats_bound());
  EXPECT_DOUBLE_EQ(fit.model.stats().mean, 2.0);
  EXPECT_EQ(fit.report.epochs_run, 0u);
  EXPECT_TRUE(fit.report.loss.empty());
}

TEST(CpTrain, DeterministicPerSeed) {
  PlantedSpec spec;
  spec.dims = {5, 5, 4, 4};
  spec.entries = 250;
  const auto planted = make_planted_cp(spec);
  CPTrainConfig cfg;
  cfg.rank = 3;
  cfg.epochs = 10;
  cfg.batch_size = 32;
  cfg.seed = 12;
  const auto a = cp_train(init_model(planted.observed.shape(), cfg), planted.observed, cfg);
  const auto b = cp_train(init_model(planted.observed.shape(), cfg), planted.observed, cfg);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.report.snapshot_id, b.report.snapshot_id);
  EXPECT_EQ(a.report.loss, b.report.loss);
  cfg.seed = 13;
  const auto c = cp_train(init_model(planted.observed.shape(), cfg), planted.observed, cfg);
  EXPECT_NE(a.report.snapshot_id, c.report.snapshot_id);
}

TEST(CpTrainProperty, ConstantShiftOfTargetsShiftsPredictions) {
  PlantedSpec spec;
  spec.dims = {5, 5, 4, 4};
  spec.entries = 200;
  spec.seed = 8;
  const auto planted = make_planted_cp(spec);
  for (double shift : {-3.0, 0.5, 100.0}) {
    SparseTensor moved(planted.observed.shape(), planted.observed.index_map());
    for (std::size_t e = 0; e < planted.observed.nnz(); ++e) {
      moved.insert(planted.observed.coord(e), planted.observed.value(e) + shift);
    }
    CPTrainConfig cfg;
    cfg.rank = 2;
    cfg.epochs = 5;
    cfg.batch_size = 32;
    const auto a = cp_train(init_model(moved.shape(), cfg), planted.observed, cfg);
    const auto b = cp_train(init_model(moved.shape(), cfg), moved, cfg);
    for (std::size_t e = 0; e < moved.nnz(); e += 7) {
      const auto c = moved.coord(e);
      EXPECT_NEAR(predict(b.model, c), predict(a.model, c) + shift, 1e-6 * (1.0 + std::abs(shift)));
    }
  }
}

TEST(CpTrain, EarlyStoppingRestoresBestEpoch) {
  PlantedSpec spec;
  spec.dims = {6, 6, 5, 5};
  spec.entries = 500;
  spec.noise = 0.3;
  const auto planted = make_planted_cp(spec);
  const auto parts = split(planted.observed, 400, 1);
  CPTrainConfig cfg;
  cfg.rank = 6;
  cfg.epochs = 300;
  cfg.batch_size = 32;
  cfg.learning_rate = 0.05;
  cfg.l2 = 0.0;
  cfg.patience = 5;
  const auto fit = cp_train(init_model(parts.train.shape(), cfg), parts.train, cfg, &parts.test);
  ASSERT_TRUE(fit.report.best_epoch.has_value());
  EXPECT_EQ(fit.report.val_mae.size(), fit.report.epochs_run);
  const double best = fit.report.val_mae[*fit.report.best_epoch - 1];
  for (double v : fit.report.val_mae) EXPECT_GE(v, best);
  const double restored = tensor_mae(parts.test, [&](CoordView c) { return predict(fit.model, c); });
  EXPECT_NEAR(restored, best, 1e-9);
}

TEST(CpTrain, NonFiniteObjectiveIsDivergence) {
  SparseTensor data(elements({3, 3, 3}));
  data.insert(Coord{0, 0, 0}, 1.0);
  data.insert(Coord{1, 1, 1}, -1.0);
  CPTrainConfig cfg;
  cfg.rank = 2;
  cfg.epochs = 3;
  cfg.init_scale = 1e120;
  try {
    cp_train(init_model(data.shape(), cfg), data, cfg);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.epoch(), 1u);
    EXPECT_EQ(e.learning_rate(), cfg.learning_rate);
  }
}

TEST(CpTrain, DuplicateCoordinatesAreRejected) {
  SparseTensor data(elements({2, 2}));
  data.insert(Coord{0, 0}, 1.0);
  data.insert(Coord{0, 0}, 2.0);
  CPTrainConfig cfg;
  cfg.rank = 1;
  EXPECT_THROW(cp_train(init_model(data.shape(), cfg), data, cfg), StateError);
}

}  // namespace
}  // namespace matten
