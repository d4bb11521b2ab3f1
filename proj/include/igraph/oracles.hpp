#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "igraph/autodiff.hpp"
#include "igraph/factor_graph.hpp"

// Reference computations written directly from the model's defining sums,
// without the autodiff graph or the factor-graph elimination. Used by the
// verification suites and the tests.
namespace igraph::oracle {

// Σ_n pf[n] Σ_{i,j} pz[n,i]·py[n,j]·τ[n,i,j,p]·exp(−|pz[n,i] − py[n,j]|/σ)
std::vector<double> preference_triple_sum(const Tensor& pf, const Tensor& pz, const Tensor& py,
                                          const Tensor& tau, double sigma);

// Σ_p p·w_p with w = softmax(p̂·ω_u·ω_t), evaluated with long double.
double expected_rating(const std::vector<double>& phat, double omega_user, double omega_item);

std::vector<double> softmax(const std::vector<double>& logits);

// Random forest-structured factor graph with ≤ max_vars variables of
// cardinality ≤ max_card; tables are constant nodes with entries in [0, 1).
struct RandomFactorGraph {
  FactorGraph graph;
  std::string query;
  Evidence evidence;
};
RandomFactorGraph random_tree_graph(Graph& g, std::mt19937_64& rng, std::size_t max_vars = 5,
                                    std::size_t max_card = 4);

}  // namespace igraph::oracle
