#include "igraph/factor_graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include "igraph/error.hpp"

namespace igraph {

// ---------------------------------------------------------------------------
// FactorGraph

void FactorGraph::add_variable(std::string name, std::size_t cardinality) {
  if (find(name)) throw NameError("duplicate variable '" + name + "'");
  if (cardinality == 0) throw StructureError("variable '" + name + "' has cardinality 0");
  variables_.push_back({std::move(name), cardinality});
}

void FactorGraph::add_factor(const Graph& graph, std::vector<std::string> scope, NodeId table,
                             std::optional<std::size_t> distribution_axis) {
  Shape expected;
  for (const auto& name : scope) expected.push_back(variable(name).cardinality);
  const Shape& actual = graph.shape(table);
  if (actual != expected) {
    throw DimensionError("factor table shape " + shape_string(actual) +
                         " does not match scope cardinalities " + shape_string(expected));
  }
  if (distribution_axis && *distribution_axis >= scope.size()) {
    throw IndexError("factor distribution axis out of range");
  }
  factors_.push_back({std::move(scope), table, distribution_axis});
}

std::optional<std::size_t> FactorGraph::find(std::string_view name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].name == name) return i;
  }
  return std::nullopt;
}

const DiscreteVariable& FactorGraph::variable(std::string_view name) const {
  auto idx = find(name);
  if (!idx) throw NameError("unknown variable '" + std::string(name) + "'");
  return variables_[*idx];
}

// ---------------------------------------------------------------------------
// Structure

namespace {

std::vector<std::vector<std::size_t>> scopes_as_indices(const FactorGraph& fg) {
  std::vector<std::vector<std::size_t>> out;
  for (const Factor& f : fg.factors()) {
    std::vector<std::size_t> idx;
    for (const auto& name : f.scope) idx.push_back(*fg.find(name));
    out.push_back(std::move(idx));
  }
  return out;
}

bool is_subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return std::all_of(a.begin(), a.end(), [&](std::size_t v) {
    return std::find(b.begin(), b.end(), v) != b.end();
  });
}

struct DisjointSet {
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
  std::vector<std::size_t> parent;
};

}  // namespace

std::vector<std::string> validate(const FactorGraph& fg, std::optional<std::string_view> root) {
  const auto& vars = fg.variables();
  const auto scopes = scopes_as_indices(fg);
  const std::size_t nv = vars.size();

  std::vector<int> uses(nv, 0);
  for (std::size_t f = 0; f < scopes.size(); ++f) {
    std::set<std::size_t> seen;
    for (std::size_t v : scopes[f]) {
      if (!seen.insert(v).second) {
        throw StructureError("factor " + std::to_string(f) + " lists variable '" + vars[v].name +
                             "' twice");
      }
      ++uses[v];
    }
  }
  for (std::size_t v = 0; v < nv; ++v) {
    if (uses[v] == 0) throw StructureError("variable '" + vars[v].name + "' is in no factor");
  }

  std::optional<std::size_t> root_idx;
  if (root) {
    root_idx = fg.find(*root);
    if (!root_idx) throw NameError("unknown variable '" + std::string(*root) + "'");
  }

  // Absorb factors covered by a strictly larger scope, or by an earlier
  // factor with the same scope.
  std::vector<std::size_t> kept;
  for (std::size_t f = 0; f < scopes.size(); ++f) {
    bool absorbed = false;
    for (std::size_t h = 0; h < scopes.size() && !absorbed; ++h) {
      if (h == f || !is_subset(scopes[f], scopes[h])) continue;
      absorbed = scopes[h].size() > scopes[f].size() || h < f;
    }
    if (!absorbed) kept.push_back(f);
  }

  // Bipartite forest check over variables [0, nv) and kept factors [nv, ...).
  DisjointSet dsu(nv + kept.size());
  std::vector<std::vector<std::size_t>> var_factors(nv);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    for (std::size_t v : scopes[kept[k]]) {
      if (!dsu.unite(nv + k, v)) {
        throw StructureError("factor graph contains a cycle through variable '" + vars[v].name +
                             "'");
      }
      var_factors[v].push_back(k);
    }
  }

  std::vector<std::string> order;
  std::vector<bool> visited(nv, false);
  std::function<void(std::size_t, std::optional<std::size_t>)> visit =
      [&](std::size_t v, std::optional<std::size_t> via) {
        visited[v] = true;
        for (std::size_t k : var_factors[v]) {
          if (via && *via == k) continue;
          for (std::size_t child : scopes[kept[k]]) {
            if (child != v && !visited[child]) visit(child, k);
          }
        }
        order.push_back(vars[v].name);
      };
  for (std::size_t v = 0; v < nv; ++v) {
    if (visited[v] || (root_idx && dsu.find(v) == dsu.find(*root_idx))) continue;
    visit(v, std::nullopt);
  }
  if (root_idx) visit(*root_idx, std::nullopt);
  return order;
}

std::vector<std::string> check_distributions(const Graph& graph, const FactorGraph& fg,
                                             double tol) {
  std::vector<std::string> problems;
  for (std::size_t f = 0; f < fg.factors().size(); ++f) {
    const Factor& factor = fg.factors()[f];
    if (!factor.distribution_axis) continue;
    const Tensor& t = graph.value(factor.table);
    for (double v : t.data()) {
      if (v < -tol) {
        problems.push_back("factor " + std::to_string(f) + " has negative entry " +
                           std::to_string(v));
        break;
      }
    }
    const std::size_t axis = *factor.distribution_axis;
    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= t.shape()[d];
    for (std::size_t d = axis + 1; d < t.rank(); ++d) inner *= t.shape()[d];
    const std::size_t len = t.shape()[axis];
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < inner; ++i) {
        double total = 0.0;
        for (std::size_t l = 0; l < len; ++l) total += t[(o * len + l) * inner + i];
        if (std::fabs(total - 1.0) > tol) {
          problems.push_back("factor " + std::to_string(f) + " slice sums to " +
                             std::to_string(total));
          o = outer;
          break;
        }
      }
    }
  }
  return problems;
}

// ---------------------------------------------------------------------------
// Sum-product via variable elimination on autodiff nodes

namespace {

struct Pending {
  NodeId node;
  std::vector<std::size_t> scope;
};

void check_evidence(const FactorGraph& fg, const Evidence& evidence) {
  for (const auto& [name, value] : evidence) {
    const DiscreteVariable& var = fg.variable(name);
    if (value >= var.cardinality) {
      throw IndexError("evidence " + name + "=" + std::to_string(value) +
                       " out of range for cardinality " + std::to_string(var.cardinality));
    }
  }
}

// Aligns `f` to `target` (which contains every variable of f): permutes its
// axes into target order and inserts size-1 axes for the missing variables.
NodeId align(Graph& g, const FactorGraph& fg, const Pending& f,
             const std::vector<std::size_t>& target) {
  std::vector<std::size_t> position(f.scope.size());
  for (std::size_t a = 0; a < f.scope.size(); ++a) {
    position[a] = static_cast<std::size_t>(
        std::find(target.begin(), target.end(), f.scope[a]) - target.begin());
  }
  std::vector<std::size_t> perm(f.scope.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::sort(perm.begin(), perm.end(),
            [&](std::size_t x, std::size_t y) { return position[x] < position[y]; });
  NodeId node = f.node;
  if (!std::is_sorted(position.begin(), position.end())) node = g.permute(node, perm);
  Shape shape(target.size(), 1);
  for (std::size_t a = 0; a < f.scope.size(); ++a) {
    shape[position[a]] = fg.variables()[f.scope[a]].cardinality;
  }
  if (shape != g.shape(node)) node = g.reshape(node, shape);
  return node;
}

Pending multiply(Graph& g, const FactorGraph& fg, const Pending& a, const Pending& b) {
  std::vector<std::size_t> scope = a.scope;
  for (std::size_t v : b.scope) {
    if (std::find(scope.begin(), scope.end(), v) == scope.end()) scope.push_back(v);
  }
  const NodeId la = align(g, fg, a, scope);
  const NodeId lb = align(g, fg, b, scope);
  return {g.mul(la, lb), std::move(scope)};
}

}  // namespace

NodeId marginal(Graph& g, const FactorGraph& fg, std::string_view query,
                const Evidence& evidence, bool normalized) {
  const std::size_t q = fg.find(query).value_or(fg.variables().size());
  if (q == fg.variables().size()) throw NameError("unknown variable '" + std::string(query) + "'");
  check_evidence(fg, evidence);
  const std::vector<std::string> order = validate(fg, query);

  std::vector<Pending> pending;
  const auto scopes = scopes_as_indices(fg);
  for (std::size_t f = 0; f < fg.factors().size(); ++f) {
    pending.push_back({fg.factors()[f].table, scopes[f]});
  }
  for (const auto& [name, value] : evidence) {
    const std::size_t v = *fg.find(name);
    Tensor indicator(Shape{fg.variables()[v].cardinality});
    indicator[value] = 1.0;
    pending.push_back({g.constant(std::move(indicator)), {v}});
  }

  for (const std::string& name : order) {
    const std::size_t v = *fg.find(name);
    if (v == q) continue;
    std::vector<Pending> touching;
    std::vector<Pending> rest;
    for (auto& p : pending) {
      (std::find(p.scope.begin(), p.scope.end(), v) != p.scope.end() ? touching : rest)
          .push_back(std::move(p));
    }
    std::stable_sort(touching.begin(), touching.end(), [](const Pending& x, const Pending& y) {
      return x.scope.size() > y.scope.size();
    });
    Pending product = std::move(touching.front());
    for (std::size_t i = 1; i < touching.size(); ++i) product = multiply(g, fg, product, touching[i]);
    const auto axis = static_cast<std::size_t>(
        std::find(product.scope.begin(), product.scope.end(), v) - product.scope.begin());
    product.node = g.reduce_sum(product.node, axis);
    product.scope.erase(product.scope.begin() + static_cast<std::ptrdiff_t>(axis));
    rest.push_back(std::move(product));
    pending = std::move(rest);
  }

  std::stable_sort(pending.begin(), pending.end(), [](const Pending& x, const Pending& y) {
    return x.scope.size() > y.scope.size();
  });
  Pending result = std::move(pending.front());
  for (std::size_t i = 1; i < pending.size(); ++i) result = multiply(g, fg, result, pending[i]);
  NodeId out = align(g, fg, result, {q});
  if (normalized) out = g.div(out, g.sum_all(out));
  return out;
}

Tensor brute_force_marginal(const Graph& g, const FactorGraph& fg, std::string_view query,
                            const Evidence& evidence, bool normalized, std::size_t max_states) {
  const auto q = fg.find(query);
  if (!q) throw NameError("unknown variable '" + std::string(query) + "'");
  check_evidence(fg, evidence);
  const auto& vars = fg.variables();
  std::size_t states = 1;
  for (const auto& v : vars) {
    if (states > max_states / v.cardinality) {
      throw CapacityError("joint state space exceeds " + std::to_string(max_states) + " states");
    }
    states *= v.cardinality;
  }

  const auto scopes = scopes_as_indices(fg);
  std::vector<std::vector<std::size_t>> strides;
  std::vector<const Tensor*> tables;
  for (std::size_t f = 0; f < scopes.size(); ++f) {
    tables.push_back(&g.value(fg.factors()[f].table));
    strides.push_back(row_major_strides(tables.back()->shape()));
  }
  std::vector<std::pair<std::size_t, std::size_t>> clamp;
  for (const auto& [name, value] : evidence) clamp.emplace_back(*fg.find(name), value);

  Tensor out(Shape{vars[*q].cardinality});
  std::vector<std::size_t> assign(vars.size(), 0);
  for (std::size_t s = 0; s < states; ++s) {
    bool consistent = true;
    for (const auto& [v, value] : clamp) consistent = consistent && assign[v] == value;
    if (consistent) {
      double weight = 1.0;
      for (std::size_t f = 0; f < scopes.size(); ++f) {
        std::size_t flat = 0;
        for (std::size_t a = 0; a < scopes[f].size(); ++a) flat += assign[scopes[f][a]] * strides[f][a];
        weight *= (*tables[f])[flat];
      }
      out[assign[*q]] += weight;
    }
    for (std::size_t v = vars.size(); v-- > 0;) {
      if (++assign[v] < vars[v].cardinality) break;
      assign[v] = 0;
    }
  }
  if (normalized) {
    double total = 0.0;
    for (double v : out.data()) total += v;
    for (double& v : out.data()) v /= total;
  }
  return out;
}

}  // namespace igraph
