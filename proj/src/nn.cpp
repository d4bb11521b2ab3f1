#include "igraph/nn.hpp"

#include <cmath>

namespace igraph::nn {

std::string layer_param(std::string_view prefix, std::size_t layer, std::string_view what) {
  return std::string(prefix) + "/layer" + std::to_string(layer) + "/" + std::string(what);
}

std::vector<std::pair<std::string, Shape>> mlp_shapes(std::string_view prefix,
                                                      const MlpSpec& spec) {
  std::vector<std::pair<std::string, Shape>> out;
  std::size_t fan_in = spec.in;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const std::size_t fan_out = l < spec.hidden.size() ? spec.hidden[l] : spec.out;
    out.emplace_back(layer_param(prefix, l, "weight"), Shape{fan_out, fan_in});
    out.emplace_back(layer_param(prefix, l, "bias"), Shape{fan_out});
    fan_in = fan_out;
  }
  return out;
}

void init_mlp(ParameterStore& params, std::string_view prefix, const MlpSpec& spec,
              std::mt19937_64& rng) {
  for (auto& [name, shape] : mlp_shapes(prefix, spec)) {
    Tensor t(shape);
    if (shape.size() == 2) {
      const double limit = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (double& v : t.data()) v = dist(rng);
    }
    params.add(name, std::move(t));
  }
}

NodeId mlp_forward(Graph& g, std::string_view prefix, std::size_t num_layers, NodeId x) {
  NodeId h = x;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const NodeId w = g.parameter(layer_param(prefix, l, "weight"));
    const NodeId b = g.parameter(layer_param(prefix, l, "bias"));
    h = g.add(g.matmul(w, h), b);
    if (l + 1 < num_layers) h = g.tanh(h);
  }
  return h;
}

}  // namespace igraph::nn
