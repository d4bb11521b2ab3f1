#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "igraph/error.hpp"
#include "igraph/synthetic.hpp"
#include "igraph/train.hpp"

namespace igraph::train {
namespace {

rec::HyperParams tiny_hyper() {
  rec::HyperParams hp;
  hp.k = 3;
  hp.num_features = 2;
  hp.num_categories = 2;
  hp.category_hidden = {6};
  hp.feature_hidden = {6};
  hp.diversity_hidden = {6};
  return hp;
}

rec::PlantedData tiny_planted(std::size_t n = 120) {
  rec::PlantedOptions opts;
  opts.num_users = 12;
  opts.num_items = 15;
  opts.num_observations = n;
  return rec::make_planted_ratings(tiny_hyper(), opts, 21);
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  ParameterStore params;
  params.add("w", Tensor::vector({1.0, -2.0}));
  const ParameterStore before = params;
  Adam adam;
  Gradients grads;
  grads.emplace("w", Tensor(Shape{2}));
  adam.step(params, grads);
  EXPECT_EQ(params, before);
  EXPECT_EQ(adam.steps(), 1u);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstSign) {
  ParameterStore params;
  params.add("w", Tensor::vector({1.0, -2.0, 0.5}));
  Adam adam({0.01, 0.9, 0.999, 1e-8});
  Gradients grads;
  grads.emplace("w", Tensor::vector({3.0, -0.002, 1e-3}));
  adam.step(params, grads);
  EXPECT_NEAR(params.at("w")[0], 1.0 - 0.01, 1e-8);
  EXPECT_NEAR(params.at("w")[1], -2.0 + 0.01, 1e-7);
  EXPECT_NEAR(params.at("w")[2], 0.5 - 0.01, 2e-7);
  EXPECT_EQ(adam.moments().at("w").first.shape(), (Shape{3}));
}

TEST(Adam, FirstStepMagnitudeBound) {
  ParameterStore params;
  params.add("w", Tensor(Shape{50}));
  Gradients grads;
  Tensor g(Shape{50});
  for (std::size_t i = 0; i < 50; ++i) g[i] = std::pow(-1.0, i) * std::pow(10.0, -6.0 + 0.25 * i);
  grads.emplace("w", g);
  Adam adam({1e-3, 0.9, 0.999, 1e-8});
  adam.step(params, grads);
  for (double v : params.at("w").data()) EXPECT_LE(std::fabs(v), 1e-3 * (1.0 + 1e-9));
}

TEST(Adam, RejectsMissingOrMisshapenGradients) {
  ParameterStore params;
  params.add("w", Tensor::vector({1.0, 2.0}));
  Adam adam;
  EXPECT_THROW(adam.step(params, {}), ContractError);
  Gradients bad;
  bad.emplace("w", Tensor::vector({1.0}));
  EXPECT_THROW(adam.step(params, bad), ContractError);
}

TEST(Evaluate, HandComputedMetrics) {
  RatingsDataset ds;
  ds.users.intern("u");
  ds.items.intern("t");
  ds.entries = {{0, 0, 1.0, 0}, {0, 0, 5.0, 0}};
  RatingsDataset train = ds;
  train.entries = {{0, 0, 3.0, 0}};
  const Metrics m = global_mean_baseline(train, ds);
  EXPECT_DOUBLE_EQ(m.rmse, 2.0);
  EXPECT_DOUBLE_EQ(m.mae, 2.0);
  EXPECT_EQ(m.n, 2u);
  EXPECT_THROW(global_mean_baseline(train, RatingsDataset{}), ContractError);
}

TEST(Evaluate, PerfectPredictionsAndNormInequality) {
  const rec::PlantedData planted = tiny_planted();
  RatingsDataset exact = planted.ratings;
  for (Rating& r : exact.entries) r.value = rec::predict(planted.truth, planted.hyper, r.user, r.item);
  const Metrics perfect = evaluate(planted.truth, planted.hyper, exact);
  EXPECT_EQ(perfect.rmse, 0.0);
  EXPECT_EQ(perfect.mae, 0.0);
  const Metrics noisy = evaluate(planted.truth, planted.hyper, planted.ratings);
  EXPECT_GE(noisy.rmse, noisy.mae);
  EXPECT_GT(noisy.rmse, 0.0);
}

TEST(Train, LogLengthAndNullUpdate) {
  const rec::PlantedData planted = tiny_planted();
  rec::HyperParams hp = planted.hyper;
  ParameterStore params = rec::init_params(hp, 2);
  const ParameterStore before = params;
  TrainOptions opts;
  opts.epochs = 3;
  opts.batch_size = 16;
  opts.adam.learning_rate = 0.0;
  const auto log = train_recommender(params, hp, planted.ratings, opts);
  ASSERT_EQ(log.size(), 3u);
  EXPECT_EQ(log[2].epoch, 3u);
  EXPECT_FALSE(log[0].validation);
  EXPECT_EQ(params, before);
  EXPECT_THROW(train_recommender(params, hp, RatingsDataset{}, opts), ContractError);
}

TEST(Train, DeterministicAcrossRuns) {
  const rec::PlantedData planted = tiny_planted();
  TrainOptions opts;
  opts.epochs = 5;
  opts.batch_size = 16;
  opts.adam.learning_rate = 1e-2;
  opts.seed = 9;
  ParameterStore a = rec::init_params(planted.hyper, 4);
  ParameterStore b = rec::init_params(planted.hyper, 4);
  const auto la = train_recommender(a, planted.hyper, planted.ratings, opts);
  const auto lb = train_recommender(b, planted.hyper, planted.ratings, opts);
  EXPECT_EQ(a, b);
  for (std::size_t e = 0; e < la.size(); ++e) EXPECT_EQ(la[e].train_loss, lb[e].train_loss);
  opts.seed = 10;
  ParameterStore c = rec::init_params(planted.hyper, 4);
  train_recommender(c, planted.hyper, planted.ratings, opts);
  EXPECT_NE(a, c);
}

TEST(Train, LossDecreasesOnPlantedData) {
  const rec::PlantedData planted = tiny_planted(150);
  ParameterStore params = rec::init_params(planted.hyper, 5);
  TrainOptions opts;
  opts.epochs = 20;
  opts.batch_size = 16;
  opts.adam.learning_rate = 1e-2;
  const auto log = train_recommender(params, planted.hyper, planted.ratings, opts);
  // Three-epoch moving average is nonincreasing up to a small slack.
  std::vector<double> smooth;
  for (std::size_t e = 2; e < log.size(); ++e) {
    smooth.push_back((log[e].train_loss + log[e - 1].train_loss + log[e - 2].train_loss) / 3.0);
  }
  for (std::size_t i = 1; i < smooth.size(); ++i) EXPECT_LE(smooth[i], smooth[i - 1] * 1.02) << i;
  EXPECT_LT(log.back().train_loss, 0.5 * log.front().train_loss);
}

TEST(EpochLog, JsonLine) {
  EpochLog with{3, 0.5, Metrics{0.9, 0.7, 10}};
  EXPECT_EQ(to_json_line(with), R"({"epoch":3,"train_loss":0.5,"val_rmse":0.9,"val_mae":0.7})");
  EpochLog without{1, 2.0, std::nullopt};
  EXPECT_EQ(to_json_line(without), R"({"epoch":1,"train_loss":2.0,"val_rmse":null,"val_mae":null})");
}

TEST(Baselines, PerUserMeanFallsBackToGlobal) {
  RatingsDataset train;
  train.users.intern("a");
  train.users.intern("b");
  train.items.intern("x");
  train.entries = {{0, 0, 4.0, 0}, {0, 0, 2.0, 0}};
  RatingsDataset test = train;
  test.entries = {{0, 0, 3.0, 0}, {1, 0, 3.0, 0}};
  const Metrics m = per_user_mean_baseline(train, test);
  EXPECT_DOUBLE_EQ(m.rmse, 0.0);
}

TEST(Planted, RatingsInRangeAndDistinctPairs) {
  const rec::PlantedData planted = tiny_planted(150);
  EXPECT_EQ(planted.ratings.size(), 150u);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const Rating& r : planted.ratings.entries) {
    EXPECT_GE(r.value, 1.0);
    EXPECT_LE(r.value, 5.0);
    EXPECT_TRUE(seen.insert({r.user, r.item}).second);
  }
  rec::PlantedOptions too_many;
  too_many.num_users = 2;
  too_many.num_items = 2;
  too_many.num_observations = 5;
  EXPECT_THROW(rec::make_planted_ratings(tiny_hyper(), too_many, 1), ConfigError);
}

}  // namespace
}  // namespace igraph::train
