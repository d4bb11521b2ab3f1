#include "igraph/recommender.hpp"

#include <random>

#include "igraph/error.hpp"
#include "igraph/factor_graph.hpp"

namespace igraph::rec {

nn::MlpSpec HyperParams::user_net() const {
  return {2 * k, category_hidden, num_features * num_categories};
}

nn::MlpSpec HyperParams::item_net() const {
  return {2 * k, category_hidden, num_features * num_categories};
}

nn::MlpSpec HyperParams::feature_net() const { return {2 * k, feature_hidden, num_features}; }

nn::MlpSpec HyperParams::diversity_net() const { return {k + num_ratings, diversity_hidden, 1}; }

void HyperParams::validate() const {
  auto positive = [](std::size_t v, const char* key) {
    if (v == 0) throw ConfigError(std::string(key) + " must be positive");
  };
  positive(num_users, "num_users");
  positive(num_items, "num_items");
  positive(k, "k");
  positive(num_features, "num_features");
  positive(num_categories, "num_categories");
  if (num_ratings < 2) throw ConfigError("num_ratings must be at least 2");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(diversity_lower <= diversity_upper)) {
    throw ConfigError("diversity_lower must not exceed diversity_upper");
  }
  const bool disabled = diversity_lower == diversity_upper && diversity_upper < 1.0;
  if (!disabled && !(diversity_lower >= 1.0 &&
                     diversity_upper <= static_cast<double>(num_ratings))) {
    throw ConfigError("diversity_lower/diversity_upper must lie within [1, num_ratings]");
  }
  for (const auto* hidden : {&category_hidden, &feature_hidden, &diversity_hidden}) {
    for (std::size_t h : *hidden) {
      if (h == 0) throw ConfigError("hidden layer widths must be positive");
    }
  }
}

std::map<std::string, Shape> expected_shapes(const HyperParams& hp) {
  std::map<std::string, Shape> out;
  out[names::kUserEmbed] = {hp.num_users, hp.k};
  out[names::kItemEmbed] = {hp.num_items, hp.k};
  out[names::kItemEmbedDiversity] = {hp.num_items, hp.k};
  out[names::kTauLogits] = {hp.num_features, hp.num_categories, hp.num_categories, hp.num_ratings};
  out[names::kOmegaUser] = {hp.num_users};
  out[names::kOmegaItem] = {hp.num_items};
  const std::pair<const char*, nn::MlpSpec> nets[] = {
      {names::kUserNet, hp.user_net()},
      {names::kItemNet, hp.item_net()},
      {names::kFeatureNet, hp.feature_net()},
      {names::kDiversityNet, hp.diversity_net()},
  };
  for (const auto& [prefix, spec] : nets) {
    for (auto& [name, shape] : nn::mlp_shapes(prefix, spec)) out[name] = shape;
  }
  return out;
}

void check_shapes(const ParameterStore& params, const HyperParams& hp) {
  const auto expected = expected_shapes(hp);
  for (const auto& [name, shape] : expected) {
    if (!params.contains(name)) throw LoadError("missing parameter '" + name + "'");
    const Tensor& t = params.at(name);
    if (t.shape() != shape) {
      throw LoadError("parameter '" + name + "' has shape " + shape_string(t.shape()) +
                      ", expected " + shape_string(shape));
    }
  }
  for (const auto& [name, _] : params.entries()) {
    if (!expected.contains(name)) throw LoadError("unexpected parameter '" + name + "'");
  }
}

ParameterStore init_params(const HyperParams& hp, std::uint64_t seed, const InitOptions& options) {
  hp.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> embed(0.0, options.embed_stddev);
  std::normal_distribution<double> tau(0.0, options.tau_stddev);
  ParameterStore params;
  auto filled = [&](Shape shape, auto& dist) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = dist(rng);
    return t;
  };
  params.add(names::kUserEmbed, filled({hp.num_users, hp.k}, embed));
  params.add(names::kItemEmbed, filled({hp.num_items, hp.k}, embed));
  params.add(names::kItemEmbedDiversity, filled({hp.num_items, hp.k}, embed));
  nn::init_mlp(params, names::kUserNet, hp.user_net(), rng);
  nn::init_mlp(params, names::kItemNet, hp.item_net(), rng);
  nn::init_mlp(params, names::kFeatureNet, hp.feature_net(), rng);
  params.add(names::kTauLogits,
             filled({hp.num_features, hp.num_categories, hp.num_categories, hp.num_ratings}, tau));
  params.add(names::kOmegaUser, Tensor(Shape{hp.num_users}, options.omega));
  params.add(names::kOmegaItem, Tensor(Shape{hp.num_items}, options.omega));
  nn::init_mlp(params, names::kDiversityNet, hp.diversity_net(), rng);
  return params;
}

NodeId matching_factor(Graph& g, NodeId pz, NodeId py, NodeId tau, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  const Shape& sz = g.shape(pz);
  const Shape& st = g.shape(tau);
  if (sz.size() != 2 || g.shape(py) != sz || st.size() != 4 || st[0] != sz[0] || st[1] != sz[1] ||
      st[2] != sz[1]) {
    throw DimensionError("matching_factor: incompatible shapes " + shape_string(sz) + ", " +
                         shape_string(g.shape(py)) + ", " + shape_string(st));
  }
  const std::size_t f = sz[0];
  const std::size_t c = sz[1];
  const NodeId diff = g.sub(g.reshape(pz, {f, c, 1}), g.reshape(py, {f, 1, c}));
  const NodeId weight = g.exp(g.scale(g.abs(diff), -1.0 / sigma));
  return g.mul(tau, g.reshape(weight, {f, c, c, 1}));
}

NodeId expected_rating(Graph& g, NodeId phat, NodeId omega_user, NodeId omega_item) {
  const Tensor& p = g.value(phat);
  if (p.rank() != 1 || p.size() < 2) {
    throw DimensionError("expected_rating: p-hat must be a vector with >= 2 entries, got " +
                         shape_string(p.shape()));
  }
  const std::size_t levels = p.size();
  const NodeId weights = g.softmax(g.mul(phat, g.mul(omega_user, omega_item)), 0);
  Tensor ladder(Shape{levels});
  for (std::size_t r = 0; r < levels; ++r) ladder[r] = static_cast<double>(r + 1);
  return g.reduce_sum(g.mul(weights, g.constant(std::move(ladder))), 0);
}

void RecommenderGraph::check_ids(std::size_t user, std::size_t item) const {
  if (user >= hp_.num_users) {
    throw IndexError("unknown user index " + std::to_string(user) + " (model has " +
                     std::to_string(hp_.num_users) + " users)");
  }
  if (item >= hp_.num_items) {
    throw IndexError("unknown item index " + std::to_string(item) + " (model has " +
                     std::to_string(hp_.num_items) + " items)");
  }
}

NodeId RecommenderGraph::entry_embedding(std::size_t user, std::size_t item) {
  check_ids(user, item);
  return g_.concat(g_.gather(g_.parameter(names::kUserEmbed), user),
                   g_.gather(g_.parameter(names::kItemEmbed), item));
}

std::pair<NodeId, NodeId> RecommenderGraph::category_distributions(NodeId entry) {
  const Shape table{hp_.num_features, hp_.num_categories};
  const auto dist = [&](const char* net, const nn::MlpSpec& spec) {
    const NodeId logits = nn::mlp_forward(g_, net, spec.num_layers(), entry);
    return g_.softmax(g_.reshape(logits, table), 1);
  };
  return {dist(names::kUserNet, hp_.user_net()), dist(names::kItemNet, hp_.item_net())};
}

NodeId RecommenderGraph::feature_mixture(NodeId entry) {
  const NodeId logits =
      nn::mlp_forward(g_, names::kFeatureNet, hp_.feature_net().num_layers(), entry);
  return g_.softmax(logits, 0);
}

NodeId RecommenderGraph::tau() {
  if (!tau_) tau_ = g_.softmax(g_.parameter(names::kTauLogits), 3);
  return *tau_;
}

NodeId RecommenderGraph::matching_factor(NodeId pz, NodeId py) {
  return rec::matching_factor(g_, pz, py, tau(), hp_.sigma);
}

NodeId RecommenderGraph::preference_distribution(std::size_t user, std::size_t item) {
  const NodeId entry = entry_embedding(user, item);
  const NodeId pf = feature_mixture(entry);
  const auto [pz, py] = category_distributions(entry);
  const NodeId match = matching_factor(pz, py);

  FactorGraph fg;
  fg.add_variable("f", hp_.num_features);
  fg.add_variable("z", hp_.num_categories);
  fg.add_variable("y", hp_.num_categories);
  fg.add_variable("p", hp_.num_ratings);
  fg.add_factor(g_, {"f"}, pf, 0);
  fg.add_factor(g_, {"f", "z"}, pz, 1);
  fg.add_factor(g_, {"f", "y"}, py, 1);
  fg.add_factor(g_, {"f", "z", "y", "p"}, match);
  return marginal(g_, fg, "p");
}

NodeId RecommenderGraph::expected_rating(NodeId phat, std::size_t user, std::size_t item) {
  check_ids(user, item);
  return rec::expected_rating(g_, phat, g_.gather(g_.parameter(names::kOmegaUser), user),
                              g_.gather(g_.parameter(names::kOmegaItem), item));
}

NodeId RecommenderGraph::diversity_adjust(NodeId rating, NodeId phat, std::size_t item) {
  if (item >= hp_.num_items) check_ids(0, item);
  const double r = g_.value(rating)[0];
  const bool active = r >= hp_.diversity_lower && r <= hp_.diversity_upper;
  g_.note_branch(active);
  if (!active) return rating;
  const NodeId input =
      g_.concat(g_.gather(g_.parameter(names::kItemEmbedDiversity), item), phat);
  const NodeId correction =
      nn::mlp_forward(g_, names::kDiversityNet, hp_.diversity_net().num_layers(), input);
  return g_.add(rating, g_.reshape(correction, {}));
}

NodeId RecommenderGraph::predict(std::size_t user, std::size_t item) {
  const NodeId phat = preference_distribution(user, item);
  const NodeId r = expected_rating(phat, user, item);
  return diversity_adjust(r, phat, item);
}

NodeId RecommenderGraph::loss_batch(std::span<const Rating> batch) {
  if (batch.empty()) throw ContractError("loss_batch: empty batch");
  NodeId total = g_.constant(Tensor::scalar(0.0));
  for (const Rating& obs : batch) {
    const NodeId err = g_.sub(predict(obs.user, obs.item), g_.constant(Tensor::scalar(obs.value)));
    total = g_.add(total, g_.mul(err, err));
  }
  return g_.scale(total, 1.0 / static_cast<double>(batch.size()));
}

double predict(const ParameterStore& params, const HyperParams& hp, std::size_t user,
               std::size_t item) {
  Graph g(&params);
  RecommenderGraph model(g, hp);
  return g.value(model.predict(user, item))[0];
}

}  // namespace igraph::rec
