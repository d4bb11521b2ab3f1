#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "igraph/autodiff.hpp"

namespace igraph {

struct DiscreteVariable {
  std::string name;
  std::size_t cardinality = 1;
};

// A factor's table is a node of the autodiff graph; when a neural node
// produces it, the factor is where gradients enter the probabilistic part.
struct Factor {
  std::vector<std::string> scope;
  NodeId table;
  // Set for conditional distributions: entries along this scope axis are
  // nonnegative and sum to 1 (checked by check_distributions, not enforced).
  std::optional<std::size_t> distribution_axis;
};

using Evidence = std::map<std::string, std::size_t, std::less<>>;

class FactorGraph {
 public:
  void add_variable(std::string name, std::size_t cardinality);
  // The table shape must equal the scope cardinalities exactly.
  void add_factor(const Graph& graph, std::vector<std::string> scope, NodeId table,
                  std::optional<std::size_t> distribution_axis = std::nullopt);

  const std::vector<DiscreteVariable>& variables() const { return variables_; }
  const std::vector<Factor>& factors() const { return factors_; }
  std::optional<std::size_t> find(std::string_view name) const;
  const DiscreteVariable& variable(std::string_view name) const;

 private:
  std::vector<DiscreteVariable> variables_;
  std::vector<Factor> factors_;
};

// Checks that the graph is a forest and returns a leaf-to-root elimination
// order with `root` (when given) last. A factor whose scope is contained in
// another factor's scope is absorbed into it before the acyclicity check, so
// conditionals such as P(z|f) next to a joint factor over (f, z, ...) are
// accepted.
std::vector<std::string> validate(const FactorGraph& graph,
                                  std::optional<std::string_view> root = std::nullopt);

// Violations of distribution-tagged factors (negative entries, slices not
// summing to 1 within tol). Empty when every tagged factor is a distribution.
std::vector<std::string> check_distributions(const Graph& graph, const FactorGraph& fg,
                                             double tol = 1e-9);

// Sum-product marginal of `query`, built only from broadcast mul / reduce_sum
// / reshape / permute nodes so backward reaches every factor table. Evidence
// clamps variables through one-hot factors. Unnormalized unless `normalized`.
NodeId marginal(Graph& graph, const FactorGraph& fg, std::string_view query,
                const Evidence& evidence = {}, bool normalized = false);

// Exhaustive sum over all joint assignments, evaluated on table values.
Tensor brute_force_marginal(const Graph& graph, const FactorGraph& fg, std::string_view query,
                            const Evidence& evidence = {}, bool normalized = false,
                            std::size_t max_states = 1'000'000);

}  // namespace igraph
