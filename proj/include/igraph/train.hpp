#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "igraph/autodiff.hpp"
#include "igraph/data.hpp"
#include "igraph/recommender.hpp"

namespace igraph::train {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct Moments {
  Tensor first;
  Tensor second;
};

// Bias-corrected Adam. Moment buffers are created lazily, shaped like their
// parameters; every store parameter must have a same-shape gradient.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(ParameterStore& params, const Gradients& grads);

  std::size_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  const std::map<std::string, Moments, std::less<>>& moments() const { return moments_; }

 private:
  AdamConfig config_;
  std::size_t steps_ = 0;
  std::map<std::string, Moments, std::less<>> moments_;
};

struct TrainOptions {
  AdamConfig adam;
  std::size_t epochs = 50;
  std::size_t batch_size = 128;
  std::uint64_t seed = 1;
};

struct Metrics {
  double rmse = 0.0;
  double mae = 0.0;
  std::size_t n = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<Metrics> validation;
};

// {"epoch":n,"train_loss":x,"val_rmse":y,"val_mae":z}; val fields are null
// without a validation set.
std::string to_json_line(const EpochLog& log);

using EpochCallback = std::function<void(const EpochLog&)>;

// Seeded per-epoch shuffling into mini-batches; the diversity gate is active
// during training. Returns one entry per epoch.
std::vector<EpochLog> train_recommender(ParameterStore& params, const rec::HyperParams& hp,
                                        const RatingsDataset& train,
                                        const TrainOptions& options,
                                        const RatingsDataset* validation = nullptr,
                                        const EpochCallback& on_epoch = {});

Metrics evaluate(const ParameterStore& params, const rec::HyperParams& hp,
                 const RatingsDataset& ds);

// Reference predictors fitted on `train`, scored on `test`.
Metrics global_mean_baseline(const RatingsDataset& train, const RatingsDataset& test);
// Users without training ratings fall back to the global mean.
Metrics per_user_mean_baseline(const RatingsDataset& train, const RatingsDataset& test);

}  // namespace igraph::train
