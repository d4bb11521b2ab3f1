#include "igraph/oracles.hpp"

#include <algorithm>
#include <cmath>

namespace igraph::oracle {

std::vector<double> preference_triple_sum(const Tensor& pf, const Tensor& pz, const Tensor& py,
                                          const Tensor& tau, double sigma) {
  const std::size_t nf = tau.shape()[0];
  const std::size_t nc = tau.shape()[1];
  const std::size_t nr = tau.shape()[3];
  std::vector<double> out(nr, 0.0);
  for (std::size_t p = 0; p < nr; ++p) {
    double total = 0.0;
    for (std::size_t n = 0; n < nf; ++n) {
      for (std::size_t i = 0; i < nc; ++i) {
        for (std::size_t j = 0; j < nc; ++j) {
          const double zu = pz.at({n, i});
          const double yt = py.at({n, j});
          total += pf.at({n}) * zu * yt * tau.at({n, i, j, p}) *
                   std::exp(-std::fabs(zu - yt) / sigma);
        }
      }
    }
    out[p] = total;
  }
  return out;
}

double expected_rating(const std::vector<double>& phat, double omega_user, double omega_item) {
  long double mx = -INFINITY;
  for (double v : phat) mx = std::max<long double>(mx, v * omega_user * omega_item);
  long double num = 0.0L;
  long double den = 0.0L;
  for (std::size_t p = 0; p < phat.size(); ++p) {
    const long double w = std::exp(static_cast<long double>(phat[p]) * omega_user * omega_item - mx);
    num += static_cast<long double>(p + 1) * w;
    den += w;
  }
  return static_cast<double>(num / den);
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) total += out[i] = std::exp(logits[i] - mx);
  for (double& v : out) v /= total;
  return out;
}

RandomFactorGraph random_tree_graph(Graph& g, std::mt19937_64& rng, std::size_t max_vars,
                                    std::size_t max_card) {
  std::uniform_int_distribution<std::size_t> nvars_dist(1, max_vars);
  std::uniform_int_distribution<std::size_t> card_dist(1, max_card);
  std::uniform_real_distribution<double> entry(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  RandomFactorGraph out;
  const std::size_t nvars = nvars_dist(rng);
  std::vector<std::string> names;
  for (std::size_t v = 0; v < nvars; ++v) {
    names.push_back("x" + std::to_string(v));
    out.graph.add_variable(names.back(), card_dist(rng));
  }
  auto add_factor = [&](std::vector<std::string> scope) {
    std::shuffle(scope.begin(), scope.end(), rng);
    Shape shape;
    for (const auto& n : scope) shape.push_back(out.graph.variable(n).cardinality);
    Tensor t(shape);
    for (double& v : t.data()) v = entry(rng);
    out.graph.add_factor(g, std::move(scope), g.constant(std::move(t)));
  };

  // Grow a tree: each new factor joins one connected variable (or starts a
  // new component) with one or two fresh variables.
  std::size_t next = 1;
  std::vector<std::size_t> connected{0};
  add_factor({names[0]});
  while (next < nvars) {
    const std::size_t fresh = std::min<std::size_t>(coin(rng) ? 2 : 1, nvars - next);
    std::vector<std::string> scope;
    const bool new_component = std::bernoulli_distribution(0.15)(rng);
    if (!new_component) {
      std::uniform_int_distribution<std::size_t> pick(0, connected.size() - 1);
      scope.push_back(names[connected[pick(rng)]]);
    }
    for (std::size_t f = 0; f < fresh; ++f) {
      scope.push_back(names[next]);
      connected.push_back(next++);
    }
    add_factor(std::move(scope));
  }
  // Extra unary factors are subsumed by larger scopes and keep the forest shape.
  for (std::size_t v = 0; v < nvars; ++v) {
    if (std::bernoulli_distribution(0.3)(rng)) add_factor({names[v]});
  }
  std::uniform_int_distribution<std::size_t> pick_var(0, nvars - 1);
  out.query = names[pick_var(rng)];
  if (nvars > 1 && coin(rng)) {
    const std::string& ev = names[pick_var(rng)];
    if (ev != out.query) {
      std::uniform_int_distribution<std::size_t> value(0, out.graph.variable(ev).cardinality - 1);
      out.evidence[ev] = value(rng);
    }
  }
  return out;
}

}  // namespace igraph::oracle
