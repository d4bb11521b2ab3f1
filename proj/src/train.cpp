#include "igraph/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "igraph/error.hpp"

namespace igraph::train {

void Adam::step(ParameterStore& params, const Gradients& grads) {
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const auto t = static_cast<double>(steps_ + 1);
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);
  for (auto& [name, theta] : params.entries()) {
    auto git = grads.find(name);
    if (git == grads.end()) throw ContractError("adam: no gradient for parameter '" + name + "'");
    const Tensor& grad = git->second;
    if (grad.shape() != theta.shape()) {
      throw ContractError("adam: gradient for '" + name + "' has shape " +
                          shape_string(grad.shape()) + ", parameter has " +
                          shape_string(theta.shape()));
    }
    auto [it, fresh] = moments_.try_emplace(name, Moments{Tensor(theta.shape()), Tensor(theta.shape())});
    Moments& mom = it->second;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = grad[i];
      mom.first[i] = b1 * mom.first[i] + (1.0 - b1) * g;
      mom.second[i] = b2 * mom.second[i] + (1.0 - b2) * g * g;
      const double m_hat = mom.first[i] / correction1;
      const double v_hat = mom.second[i] / correction2;
      theta[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
  ++steps_;
}

std::string to_json_line(const EpochLog& log) {
  nlohmann::ordered_json j;
  j["epoch"] = log.epoch;
  j["train_loss"] = log.train_loss;
  if (log.validation) {
    j["val_rmse"] = log.validation->rmse;
    j["val_mae"] = log.validation->mae;
  } else {
    j["val_rmse"] = nullptr;
    j["val_mae"] = nullptr;
  }
  return j.dump();
}

std::vector<EpochLog> train_recommender(ParameterStore& params, const rec::HyperParams& hp,
                                        const RatingsDataset& train, const TrainOptions& options,
                                        const RatingsDataset* validation,
                                        const EpochCallback& on_epoch) {
  if (train.empty()) throw ContractError("train: empty training set");
  if (options.batch_size == 0) throw ConfigError("batch_size must be positive");
  hp.validate();
  rec::check_shapes(params, hp);

  Adam adam(options.adam);
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Rating> batch;
  std::vector<EpochLog> history;

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double weighted_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train.entries[order[i]]);
      Gradients grads;
      {
        Graph g(&params);
        rec::RecommenderGraph model(g, hp);
        const NodeId loss = model.loss_batch(batch);
        weighted_loss += g.value(loss)[0] * static_cast<double>(batch.size());
        grads = g.backward(loss);
      }
      adam.step(params, grads);
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = weighted_loss / static_cast<double>(train.size());
    if (validation && !validation->empty()) log.validation = evaluate(params, hp, *validation);
    if (on_epoch) on_epoch(log);
    history.push_back(log);
  }
  return history;
}

namespace {

template <typename Predictor>
Metrics score(const RatingsDataset& ds, Predictor predict) {
  if (ds.empty()) throw ContractError("evaluate: empty dataset");
  double se = 0.0;
  double ae = 0.0;
  for (const Rating& r : ds.entries) {
    const double err = predict(r) - r.value;
    se += err * err;
    ae += std::fabs(err);
  }
  const auto n = static_cast<double>(ds.size());
  return {std::sqrt(se / n), ae / n, ds.size()};
}

double mean_rating(const RatingsDataset& ds) {
  if (ds.empty()) throw ContractError("baseline: empty training set");
  double total = 0.0;
  for (const Rating& r : ds.entries) total += r.value;
  return total / static_cast<double>(ds.size());
}

}  // namespace

Metrics evaluate(const ParameterStore& params, const rec::HyperParams& hp,
                 const RatingsDataset& ds) {
  return score(ds, [&](const Rating& r) { return rec::predict(params, hp, r.user, r.item); });
}

Metrics global_mean_baseline(const RatingsDataset& train, const RatingsDataset& test) {
  const double mu = mean_rating(train);
  return score(test, [&](const Rating&) { return mu; });
}

Metrics per_user_mean_baseline(const RatingsDataset& train, const RatingsDataset& test) {
  const double mu = mean_rating(train);
  std::vector<double> sum(train.users.size(), 0.0);
  std::vector<std::size_t> count(train.users.size(), 0);
  for (const Rating& r : train.entries) {
    sum[r.user] += r.value;
    ++count[r.user];
  }
  return score(test, [&](const Rating& r) {
    if (r.user < count.size() && count[r.user] > 0) return sum[r.user] / static_cast<double>(count[r.user]);
    return mu;
  });
}

}  // namespace igraph::train
