#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "beamgat/errors.hpp"
#include "beamgat/metrics.hpp"
#include "beamgat/trainer.hpp"

using namespace beamgat;

namespace {

model::ParamSet single(ad::Tensor t) {
  model::ParamSet p;
  p.add("w", std::move(t));
  return p;
}

SparseFrame grid_frame(std::size_t side, double (*z_of)(double, double), std::size_t drop_every_nth_beam = 4) {
  PointCloud c;
  std::vector<bool> mask;
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) {
      const double x = 2.0 + static_cast<double>(i) * 0.5;
      const double y = -4.0 + static_cast<double>(j) * 0.5;
      const int beam = static_cast<int>(i % 64);
      c.points.push_back({x, y, z_of(x, y), 0});
      c.beam.push_back(beam);
      mask.push_back(beam % static_cast<int>(drop_every_nth_beam) == 0);
    }
  }
  return make_sparse_frame(c, mask);
}

model::ModelConfig small_config() {
  model::ModelConfig cfg;
  cfg.heads = 2;
  cfg.head_width = 4;
  cfg.ffn_hidden = 16;
  cfg.decoder_hidden = 8;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  auto p = single(ad::Tensor::vector({1.0, -2.0, 0.5}));
  const auto before = p;
  train::AdamState s;
  const std::vector<ad::Tensor> g{ad::Tensor({3}, 0.0)};
  for (int i = 0; i < 5; ++i) train::adam_step(p, g, s, {});
  EXPECT_EQ(p, before);
}

TEST(Adam, FirstStepIsSignTimesLearningRate) {
  auto p = single(ad::Tensor::vector({1.0, -2.0, 0.5}));
  train::AdamState s;
  const train::AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
  const std::vector<ad::Tensor> g{ad::Tensor::vector({0.3, -4.0, 1e-3})};
  train::adam_step(p, g, s, cfg);
  const std::vector<double> start{1.0, -2.0, 0.5};
  for (std::size_t i = 0; i < 3; ++i) {
    const double gi = g[0][i];
    EXPECT_NEAR(p.at("w")[i] - start[i], -cfg.learning_rate * gi / (std::abs(gi) + cfg.eps), 1e-15);
  }
}

TEST(Adam, BuffersAreNotUpdated) {
  model::ParamSet p;
  p.add("w", ad::Tensor::vector({1.0}));
  p.add("buf", ad::Tensor::vector({2.0}), false);
  train::AdamState s;
  const std::vector<ad::Tensor> g{ad::Tensor::vector({1.0}), ad::Tensor::vector({1.0})};
  train::adam_step(p, g, s, {});
  EXPECT_EQ(p.at("buf")[0], 2.0);
  EXPECT_LT(p.at("w")[0], 1.0);
}

TEST(Adam, QuadraticBowlDecreases) {
  auto p = single(ad::Tensor::vector({3.0, -2.0}));
  train::AdamState s;
  const train::AdamConfig cfg{1e-2};
  auto f = [&] { return p.at("w")[0] * p.at("w")[0] + 4 * p.at("w")[1] * p.at("w")[1]; };
  double prev = f();
  const double start = prev;
  for (int i = 0; i < 50; ++i) {
    const std::vector<ad::Tensor> g{ad::Tensor::vector({2 * p.at("w")[0], 8 * p.at("w")[1]})};
    train::adam_step(p, g, s, cfg);
    EXPECT_LT(f(), prev);
    prev = f();
  }
  EXPECT_LT(prev, start);
}

TEST(TrainConfig, Validation) {
  train::TrainConfig c;
  c.mask_fraction = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.mask_fraction = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.mask_fraction = 0.25;
  c.epochs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Supervision, NeverIncludesDroppedNodesAndIsStratified) {
  const SparseFrame f = grid_frame(20, [](double x, double y) { return 0.1 * x - 0.05 * y; });
  for (std::size_t e = 0; e < 20; ++e) {
    const auto nodes = train::supervision_nodes(f, 0.25, 9, e);
    EXPECT_EQ(nodes.size(), 75u);  // round(0.25 * 300)
    std::vector<int> per_beam(64, 0);
    for (std::size_t i : nodes) {
      EXPECT_FALSE(f.dropped(i));
      ++per_beam[static_cast<std::size_t>(f.cloud().beam[i])];
    }
    for (int b = 0; b < 20; ++b) {
      if (b % 4 != 0) EXPECT_EQ(per_beam[static_cast<std::size_t>(b)], 5) << b;
    }
  }
  EXPECT_EQ(train::supervision_nodes(f, 0.25, 9, 4), train::supervision_nodes(f, 0.25, 9, 4));
  EXPECT_NE(train::supervision_nodes(f, 0.25, 9, 4), train::supervision_nodes(f, 0.25, 9, 5));
}

TEST(Normalization, UsesObservedPointsOnly) {
  const SparseFrame f = grid_frame(8, [](double x, double) { return x; });
  model::ParamSet p = model::init_params(small_config(), 0);
  train::fit_normalization(p, f);
  double sum = 0;
  const auto obs = f.observed_indices();
  for (std::size_t i : obs) sum += f.z_masked()[i];
  EXPECT_NEAR(p.at(model::kOutputAffine)[1], sum / static_cast<double>(obs.size()), 1e-12);
}

TEST(Trainer, FitsConstantSurface) {
  const SparseFrame f = grid_frame(12, [](double, double) { return -1.7; });
  const Graph g = build_knn_graph(f, 6);
  train::TrainConfig tc;
  tc.epochs = 200;
  tc.adam.learning_rate = 5e-3;
  const auto r = train::train_frame(f, g, small_config(), tc);
  EXPECT_LE(r.history[r.best_epoch].loss, 1e-4);
  const auto pred = train::predict_dropped(f, g, small_config(), r.params);
  EXPECT_LT(metrics::rmse_z(pred.z_dropped, metrics::GroundTruth::dropped_z(f)), 1e-2);
}

TEST(Trainer, LossHistoryIsBitIdentical) {
  const SparseFrame f = grid_frame(10, [](double x, double y) { return std::sin(x) * std::cos(y); });
  const Graph g = build_knn_graph(f, 5);
  train::TrainConfig tc;
  tc.epochs = 15;
  tc.seed = 42;
  const auto a = train::train_frame(f, g, small_config(), tc);
  const auto b = train::train_frame(f, g, small_config(), tc);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].loss, b.history[i].loss);
  EXPECT_EQ(a.params, b.params);
}

TEST(Trainer, BestParamsAreKeptAndPatienceStops) {
  const SparseFrame f = grid_frame(10, [](double x, double y) { return std::sin(x) + 0.2 * y; });
  const Graph g = build_knn_graph(f, 5);
  train::TrainConfig tc;
  tc.epochs = 300;
  tc.patience = 3;
  tc.adam.learning_rate = 0.5;
  const auto r = train::train_frame(f, g, small_config(), tc);
  EXPECT_LE(r.history.size(), 300u);
  for (const auto& h : r.history) EXPECT_GE(h.loss, r.history[r.best_epoch].loss);
  if (r.history.size() < 300u) EXPECT_EQ(r.history.size() - 1 - r.best_epoch, 3u);
}

TEST(Trainer, GateStaysInsideUnitInterval) {
  const SparseFrame f = grid_frame(10, [](double x, double) { return 0.3 * x; });
  const Graph g = build_knn_graph(f, 5);
  train::TrainConfig tc;
  tc.epochs = 40;
  tc.adam.learning_rate = 1e-2;
  const auto r = train::train_frame(f, g, small_config(), tc);
  const double gamma = 1.0 / (1.0 + std::exp(-r.params.at(model::kGateLogit)[0]));
  EXPECT_GT(gamma, 0.0);
  EXPECT_LT(gamma, 1.0);
}

TEST(Predict, EmptyAndFullDropSets) {
  const auto z_of = [](double x, double y) { return 0.1 * x + 0.1 * y; };
  PointCloud c;
  for (int i = 0; i < 30; ++i) c.points.push_back({1.0 + i, 0.5 * i, z_of(1.0 + i, 0.5 * i), 0});
  c.beam.assign(30, 7);
  const auto cfg = small_config();
  const auto params = model::init_params(cfg, 1);

  const SparseFrame none = make_sparse_frame(c, std::vector<bool>(30, false));
  EXPECT_TRUE(train::predict_dropped(none, build_knn_graph(none, 4), cfg, params).z_dropped.empty());

  const SparseFrame all = make_sparse_frame(c, std::vector<bool>(30, true));
  const Graph g = build_knn_graph(all, 4);
  const auto p1 = train::predict_dropped(all, g, cfg, params);
  EXPECT_EQ(p1.z_dropped.size(), 30u);
  const auto p2 = train::predict_dropped(all, g, cfg, params);
  EXPECT_EQ(p1.z_dropped, p2.z_dropped);
  EXPECT_THROW(train::train_frame(all, g, cfg, {}), ConfigError);
}
