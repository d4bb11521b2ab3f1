#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "igraph/autodiff.hpp"
#include "igraph/data.hpp"
#include "igraph/nn.hpp"

namespace igraph::rec {

// Model dimensions and the diversity band. The band is disabled by setting
// lower == upper < 1, which no prediction in [1, |R|] can reach.
struct HyperParams {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::size_t k = 8;
  std::size_t num_features = 4;
  std::size_t num_categories = 4;
  std::size_t num_ratings = 5;
  double sigma = 0.5;
  double diversity_lower = 2.5;
  double diversity_upper = 3.5;
  std::vector<std::size_t> category_hidden{32};
  std::vector<std::size_t> feature_hidden{32};
  std::vector<std::size_t> diversity_hidden{32};

  void disable_diversity() { diversity_lower = diversity_upper = 0.0; }
  bool diversity_enabled() const { return diversity_lower >= 1.0; }

  nn::MlpSpec user_net() const;
  nn::MlpSpec item_net() const;
  nn::MlpSpec feature_net() const;
  nn::MlpSpec diversity_net() const;

  // ConfigError naming the offending field.
  void validate() const;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

namespace names {
inline constexpr const char* kUserEmbed = "user_embed";
inline constexpr const char* kItemEmbed = "item_embed";
inline constexpr const char* kItemEmbedDiversity = "item_embed_diversity";
inline constexpr const char* kUserNet = "user_net";
inline constexpr const char* kItemNet = "item_net";
inline constexpr const char* kFeatureNet = "feature_net";
inline constexpr const char* kDiversityNet = "diversity_net";
inline constexpr const char* kTauLogits = "tau_logits";
inline constexpr const char* kOmegaUser = "omega_user";
inline constexpr const char* kOmegaItem = "omega_item";
}  // namespace names

// Every parameter the model owns, with its shape.
std::map<std::string, Shape> expected_shapes(const HyperParams& hp);

// Throws LoadError when the store's names or shapes differ from expected_shapes.
void check_shapes(const ParameterStore& params, const HyperParams& hp);

struct InitOptions {
  double embed_stddev = 0.1;
  double tau_stddev = 0.1;
  double omega = 1.0;
};

ParameterStore init_params(const HyperParams& hp, std::uint64_t seed,
                           const InitOptions& options = {});

// τ[n,i,j,p] · exp(−|Pz[n,i] − Py[n,j]|/σ), shape |F|×|C|×|C|×|R|.
// `tau` must already be normalized along its last axis.
NodeId matching_factor(Graph& g, NodeId pz, NodeId py, NodeId tau, double sigma);

// Σ_p p · softmax_p(p̂[p]·ω_u·ω_t) for p = 1..|R|; returns a scalar node.
NodeId expected_rating(Graph& g, NodeId phat, NodeId omega_user, NodeId omega_item);

// Builds the rating-prediction pipeline on a caller-owned graph bound to the
// model's parameter store.
class RecommenderGraph {
 public:
  RecommenderGraph(Graph& g, const HyperParams& hp) : g_(g), hp_(hp) {}

  NodeId entry_embedding(std::size_t user, std::size_t item);
  // (Pz, Py), each |F|×|C| and stochastic along the category axis.
  std::pair<NodeId, NodeId> category_distributions(NodeId entry);
  NodeId feature_mixture(NodeId entry);
  // softmax of tau_logits along the rating axis; built once per graph.
  NodeId tau();
  NodeId matching_factor(NodeId pz, NodeId py);
  // Two-level mixture over features and category pairs, evaluated as the
  // rating marginal of the f-(z, y)-p factor graph.
  NodeId preference_distribution(std::size_t user, std::size_t item);
  NodeId expected_rating(NodeId phat, std::size_t user, std::size_t item);
  // Adds the diversity network's correction when r lies inside the band;
  // otherwise returns r's node unchanged. The gate itself has no gradient.
  NodeId diversity_adjust(NodeId rating, NodeId phat, std::size_t item);
  NodeId predict(std::size_t user, std::size_t item);
  // Mean squared error of predict() against observed ratings.
  NodeId loss_batch(std::span<const Rating> batch);

  Graph& graph() { return g_; }
  const HyperParams& hyper() const { return hp_; }

 private:
  void check_ids(std::size_t user, std::size_t item) const;

  Graph& g_;
  const HyperParams& hp_;
  std::optional<NodeId> tau_;
};

double predict(const ParameterStore& params, const HyperParams& hp, std::size_t user,
               std::size_t item);

}  // namespace igraph::rec
