// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "matten/error.hpp"
#include "matten/neat.hpp"
#include "support/oracles.hpp"

namespace matten {
namespace {

const Shape kShape({5, 4, 3}, {ModeKind::element, ModeKind::element, ModeKind::count});

NeatTrainConfig small_config(std::uint64_t seed) {
  NeatTrainConfig cfg;
  cfg.components = 3;
  cfg.embed_dim = 2;
  cfg.hidden = 5;
  cfg.seed = seed;
  return cfg;
}

// Nonzero biases keep relu units away from their kink.
NeatModel random_model(std::uint64_t seed) {
  auto model = init_neat(kShape, small_config(seed));
  Rng rng(seed + 1000);
  for (std::size_t r = 0; r < model.components(); ++r) {
    auto& net = model.mutable_net(r);
    for (std::size_t k = 0; k < net.layers().size(); ++k) {
      for (auto& b : net.mutable_layer(k).bias) b = rng.uniform(-0.4, 0.4);
    }
  }
  return model;
}

SparseTensor random_data(std::uint64_t seed, std::size_t n) {
  SparseTensor t(kShape);
  Rng rng(seed);
  std::vector<Coord> cells;
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 4; ++j)
      for (Index k = 0; k < 3; ++k) cells.push_back({i, j, k});
  rng.shuffle(std::span<Coord>(cells));
  for (std::size_t e = 0; e < n; ++e) t.insert(cells[e], rng.uniform(-2.0, 2.0));
  return t;
}

std::vector<std::size_t> all_entries(const SparseTensor& t) {
  std::vector<std::size_t> out(t.nnz());
  std::iota(out.begin(), out.end(), 0);
  return out;
}

TEST(NeatInit, LayoutAndScale) {
  auto cfg = small_config(1);
  cfg.init_scale = 0.3;
  const auto model = init_neat(kShape, cfg);
  EXPECT_EQ(model.components(), 3u);
  EXPECT_EQ(model.embed_dim(), 2u);
  EXPECT_EQ(model.hidden(), 5u);
  EXPECT_EQ(model.embedding(2, 1).rows(), 4u);
  EXPECT_EQ(model.net(0).input_width(), 3u * 2u);
  EXPECT_EQ(model.net(0).output_width(), 1u);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t n = 0; n < 3; ++n)
      for (double v : model.embedding(r, n).values()) EXPECT_LE(std::abs(v), 0.3);
}

TEST(NeatConfig, Validation) {
  NeatTrainConfig cfg;
  cfg.components = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.embed_dim = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(NeatPredict, ZeroHeadsPredictTheMean) {
  auto model = random_model(2);
  for (std::size_t r = 0; r < model.components(); ++r) {
    auto& head = model.mutable_net(r).mutable_layer(1);
    std::fill(head.weights.values().begin(), head.weights.values().end(), 0.0);
    std::fill(head.bias.begin(), head.bias.end(), 0.0);
  }
  model.bind_stats({4.25, 3.0});
  EXPECT_EQ(neat_predict(model, Coord{1, 2, 0}), 4.25);
  EXPECT_EQ(neat_predict(model, Coord{4, 3, 2}), 4.25);
}

TEST(NeatPredict, RequiresStats) {
  const auto model = random_model(3);
  EXPECT_THROW(neat_predict(model, Coord{0, 0, 0}), StateError);
  EXPECT_THROW(neat_predict_raw(model, Coord{5, 0, 0}), BoundsError);
}

TEST(NeatPredict, ComponentsMatchBruteForceAndAdd) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto model = random_model(seed);
    model.bind_stats({-1.0, 2.5});
    const Coord c{static_cast<Index>(seed % 5), static_cast<Index>(seed % 4), 2};
    double sum = 0.0;
    for (std::size_t r = 0; r < model.components(); ++r) {
      std::vector<double> x;
      for (std::size_t n = 0; n < 3; ++n) {
        const auto row = model.embedding(r, n).row(c[n]);
        x.insert(x.end(), row.begin(), row.end());
      }
      const double want = testing::brute_force_forward(model.net(r), x)[0];
      EXPECT_NEAR(neat_component(model, r, c), want, 1e-12);
      sum += want;
    }
    EXPECT_NEAR(neat_predict_raw(model, c), sum, 1e-12);
    EXPECT_NEAR(neat_predict(model, c), -1.0 + 2.5 * sum, 1e-12);
  }
}

TEST(NeatObjective, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto model = random_model(seed);
    const auto data = random_data(seed, 25);
    model.bind_stats({0.2, 1.3});
    const auto entries = all_entries(data);
    const double l2 = 0.05;
    auto grads = NeatGrads::zeros_like(model);
    neat_objective(model, data, entries, l2, &grads);
    const auto params = model.parameter_blocks();
    const auto worst = testing::worst_fd_mismatch(
        params, grads.views(), [&] { return neat_objective(model, data, entries, l2, nullptr); });
    EXPECT_LT(worst.error, testing::kFdTolerance)
        << "block " << worst.block << " index " << worst.index << " analytic " << worst.analytic
        << " numeric " << worst.numeric;
  }
}

TEST(NeatObjective, SingleEntryTouchesOnlyItsRows) {
  auto model = random_model(5);
  const auto data = random_data(5, 20);
  model.bind_stats({0.0, 1.0});
  for (std::size_t e = 0; e < data.nnz(); e += 3) {
    const std::vector<std::size_t> one{e};
    auto grads = NeatGrads::zeros_like(model);
    neat_objective(model, data, one, 0.0, &grads);
    const auto c = data.coord(e);
    for (std::size_t r = 0; r < model.components(); ++r) {
      for (std::size_t n = 0; n < 3; ++n) {
        const auto& g = grads.embeddings[r][n];
        for (std::size_t i = 0; i < g.rows(); ++i) {
          if (i == c[n]) continue;
          for (double v : g.row(i)) EXPECT_EQ(v, 0.0);
        }
      }
    }
  }
}

TEST(NeatObjective, L2SkipsBiases) {
  auto model = random_model(6);
  const auto data = random_data(6, 10);
  model.bind_stats({0.0, 1.0});
  const auto entries = all_entries(data);
  double squares = 0.0;
  for (std::size_t r = 0; r < model.components(); ++r) {
    for (std::size_t n = 0; n < 3; ++n)
      for (double v : model.embedding(r, n).values()) squares += v * v;
    for (const auto& layer : model.net(r).layers())
      for (double v : layer.weights.values()) squares += v * v;
  }
  const double plain = neat_objective(model, data, entries, 0.0, nullptr);
  const double reg = neat_objective(model, data, entries, 0.1, nullptr);
  EXPECT_NEAR(reg - plain, 0.1 * squares, 1e-12);
}

// A wider student trained on half the cells of a tensor generated by a
// single-component teacher, scored on the other half.
TEST(NeatTrain, TeacherStudentRecovery) {
  const Shape shape({8, 8, 6}, {ModeKind::element, ModeKind::element, ModeKind::count});
  NeatTrainConfig arch;
  arch.components = 1;
  arch.embed_dim = 2;
  arch.hidden = 4;
  arch.init_scale = 1.0;
  arch.seed = 77;
  const auto teacher = init_neat(shape, arch);
  SparseTensor full(shape);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 8; ++j)
      for (Index k = 0; k < 6; ++k) {
        const Coord c{i, j, k};
        full.insert(c, neat_predict_raw(teacher, c));
      }
  const auto parts = split(full, full.nnz() / 2, 5);

  auto cfg = arch;
  cfg.seed = 3;
  cfg.components = 2;
  cfg.hidden = 8;
  cfg.learning_rate = 5e-3;
  cfg.epochs = 1500;
  cfg.batch_size = 32;
  cfg.l2 = 1e-3;
  const auto fit = neat_train(init_neat(shape, cfg), parts.train, cfg);
  const double mae = tensor_mae(parts.test, [&](CoordView c) { return neat_predict(fit.model, c); });
  const double spread = value_stats(full.values()).std;
  EXPECT_LT(mae, 0.1 * spread) << "mae " << mae << " std " << spread;
}

TEST(NeatTrain, ZeroEpochsBindsStatsOnly) {
  const auto data = random_data(1, 12);
  auto cfg = small_config(4);
  cfg.epochs = 0;
  const auto init = init_neat(kShape, cfg);
  const auto fit = neat_train(init, data, cfg);
  EXPECT_TRUE(fit.model.stats_bound());
  EXPECT_EQ(fit.report.epochs_run, 0u);
  const auto a = fit.model.parameter_blocks();
  const auto b = init.parameter_blocks();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_TRUE(std::equal(a[k].begin(), a[k].end(), b[k].begin(), b[k].end()));
  }
}

TEST(NeatTrain, DeterministicPerSeed) {
  const auto data = random_data(2, 40);
  auto cfg = small_config(9);
  cfg.epochs = 15;
  cfg.batch_size = 8;
  const auto a = neat_train(init_neat(kShape, cfg), data, cfg);
  const auto b = neat_train(init_neat(kShape, cfg), data, cfg);
  EXPECT_EQ(a.report.snapshot_id, b.report.snapshot_id);
  EXPECT_EQ(a.report.loss, b.report.loss);
  cfg.seed = 10;
  const auto c = neat_train(init_neat(kShape, cfg), data, cfg);
  EXPECT_NE(a.report.snapshot_id, c.report.snapshot_id);
}

TEST(NeatTrain, LossDecreases) {
  const auto data = random_data(3, 50);
  auto cfg = small_config(1);
  cfg.epochs = 200;
  cfg.batch_size = 10;
  cfg.learning_rate = 1e-2;
  const auto fit = neat_train(init_neat(kShape, cfg), data, cfg);
  EXPECT_LT(fit.report.loss.back(), 0.5 * fit.report.loss.front());
}

}  // namespace
}  // namespace matten
