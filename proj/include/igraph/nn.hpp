#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "igraph/autodiff.hpp"

namespace igraph::nn {

// Perceptron layout: tanh hidden layers, linear output layer. Layer l stores
// "<prefix>/layer<l>/weight" [out×in] and "<prefix>/layer<l>/bias" [out].
struct MlpSpec {
  std::size_t in = 0;
  std::vector<std::size_t> hidden;
  std::size_t out = 0;

  std::size_t num_layers() const { return hidden.size() + 1; }
};

std::string layer_param(std::string_view prefix, std::size_t layer, std::string_view what);

// Expected shapes keyed by parameter name.
std::vector<std::pair<std::string, Shape>> mlp_shapes(std::string_view prefix, const MlpSpec& spec);

// Weights uniform in ±sqrt(6 / (fan_in + fan_out)), biases 0.
void init_mlp(ParameterStore& params, std::string_view prefix, const MlpSpec& spec,
              std::mt19937_64& rng);

NodeId mlp_forward(Graph& g, std::string_view prefix, std::size_t num_layers, NodeId x);

}  // namespace igraph::nn
