#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "igraph/error.hpp"
#include "igraph/factor_graph.hpp"
#include "igraph/gradcheck.hpp"
#include "igraph/oracles.hpp"

namespace igraph {
namespace {

// d-w-z chain from the text-classification example.
struct Chain {
  Graph g;
  FactorGraph fg;
  Chain() {
    fg.add_variable("d", 1);
    fg.add_variable("w", 2);
    fg.add_variable("z", 2);
    fg.add_factor(g, {"d", "w"}, g.constant(Tensor(Shape{1, 2}, {0.6, 0.4})), 1);
    fg.add_factor(g, {"w", "z"}, g.constant(Tensor::matrix({{0.7, 0.3}, {0.2, 0.8}})), 1);
  }
};

TEST(Validate, SingleFactor) {
  Graph g;
  FactorGraph fg;
  fg.add_variable("z", 3);
  fg.add_factor(g, {"z"}, g.constant(Tensor::vector({1, 2, 3})));
  EXPECT_EQ(validate(fg), (std::vector<std::string>{"z"}));
}

TEST(Validate, ChainEliminatesWBeforeQuery) {
  Chain c;
  const auto order = validate(c.fg, "z");
  ASSERT_EQ(order.size(), 3u);
  EXPECT_EQ(order.back(), "z");
  const auto w = std::find(order.begin(), order.end(), "w");
  ASSERT_NE(w, order.end());
}

TEST(Validate, RejectsCycle) {
  Graph g;
  FactorGraph fg;
  for (const char* v : {"a", "b", "c"}) fg.add_variable(v, 2);
  const auto t = [&] { return g.constant(Tensor(Shape{2, 2}, 1.0)); };
  fg.add_factor(g, {"a", "b"}, t());
  fg.add_factor(g, {"b", "c"}, t());
  fg.add_factor(g, {"c", "a"}, t());
  EXPECT_THROW(validate(fg), StructureError);
  EXPECT_THROW(marginal(g, fg, "a"), StructureError);
}

TEST(Validate, RejectsDanglingVariableAndBadScopes) {
  Graph g;
  FactorGraph fg;
  fg.add_variable("a", 2);
  fg.add_variable("lonely", 2);
  fg.add_factor(g, {"a"}, g.constant(Tensor::vector({1, 1})));
  EXPECT_THROW(validate(fg), StructureError);
  EXPECT_THROW(fg.add_factor(g, {"a"}, g.constant(Tensor::vector({1, 1, 1}))), DimensionError);
  EXPECT_THROW(fg.add_factor(g, {"nope"}, g.constant(Tensor::vector({1, 1}))), NameError);
  EXPECT_THROW(fg.add_variable("a", 3), NameError);
  EXPECT_THROW(fg.add_variable("empty", 0), StructureError);
}

TEST(Validate, AbsorbsSubsumedFactors) {
  // P(f), P(z|f), P(y|f) next to a joint factor over (f, z, y): cyclic as a
  // bipartite graph, a tree once the subsumed factors are absorbed.
  Graph g;
  FactorGraph fg;
  fg.add_variable("f", 2);
  fg.add_variable("z", 2);
  fg.add_variable("y", 3);
  fg.add_factor(g, {"f"}, g.constant(Tensor::vector({0.4, 0.6})));
  fg.add_factor(g, {"f", "z"}, g.constant(Tensor(Shape{2, 2}, 0.5)));
  fg.add_factor(g, {"f", "y"}, g.constant(Tensor(Shape{2, 3}, 1.0 / 3.0)));
  fg.add_factor(g, {"f", "z", "y"}, g.constant(Tensor(Shape{2, 2, 3}, 2.0)));
  EXPECT_NO_THROW(validate(fg, "y"));
  const Tensor fast = g.value(marginal(g, fg, "y"));
  const Tensor slow = brute_force_marginal(g, fg, "y");
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(fast[i], slow[i], 1e-14);
}

TEST(Marginal, ChainHandValue) {
  Chain c;
  const Tensor z = c.g.value(marginal(c.g, c.fg, "z"));
  EXPECT_NEAR(z[1], 0.6 * 0.3 + 0.4 * 0.8, 1e-15);
  EXPECT_NEAR(z[0] + z[1], 1.0, 1e-15);
}

TEST(Marginal, EvidenceClampingThenNormalizing) {
  Chain c;
  const Evidence w1{{"w", 0}};
  EXPECT_NEAR(c.g.value(marginal(c.g, c.fg, "z", w1, true))[1], 0.3, 1e-15);
  EXPECT_NEAR(brute_force_marginal(c.g, c.fg, "z", w1, true)[1], 0.3, 1e-15);
  EXPECT_THROW(marginal(c.g, c.fg, "z", Evidence{{"w", 2}}), IndexError);
  EXPECT_THROW(marginal(c.g, c.fg, "q"), NameError);
}

TEST(Marginal, SingleFactorIsItsOwnTable) {
  Graph g;
  FactorGraph fg;
  fg.add_variable("z", 3);
  fg.add_factor(g, {"z"}, g.constant(Tensor::vector({0.2, 0.5, 0.3})), 0);
  EXPECT_EQ(g.value(marginal(g, fg, "z")), Tensor::vector({0.2, 0.5, 0.3}));
  EXPECT_TRUE(check_distributions(g, fg).empty());
}

TEST(Marginal, UniformFactorGivesUniformVector) {
  Graph g;
  FactorGraph fg;
  fg.add_variable("z", 4);
  fg.add_factor(g, {"z"}, g.constant(Tensor(Shape{4}, 0.25)));
  const Tensor b = brute_force_marginal(g, fg, "z");
  for (double v : b.data()) EXPECT_EQ(v, 0.25);
}

TEST(Marginal, GradientReachesFactorTables) {
  ParameterStore store;
  store.add("pw", Tensor(Shape{1, 2}, {0.6, 0.4}));
  store.add("pz", Tensor::matrix({{0.7, 0.3}, {0.2, 0.8}}));
  const LossBuilder build = [](Graph& g) {
    FactorGraph fg;
    fg.add_variable("d", 1);
    fg.add_variable("w", 2);
    fg.add_variable("z", 2);
    fg.add_factor(g, {"d", "w"}, g.parameter("pw"));
    fg.add_factor(g, {"w", "z"}, g.parameter("pz"));
    return g.slice(marginal(g, fg, "z", {}, true), 1, 1);
  };
  for (const char* p : {"pw", "pz"}) {
    const GradCheckResult r = finite_diff_check(store, [&](Graph& g) { return g.reshape(build(g), {}); }, p);
    EXPECT_LT(r.max_rel_error, 1e-4) << p;
  }
}

TEST(Marginal, MatchesEnumerationOnRandomForests) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    Graph g;
    auto rg = oracle::random_tree_graph(g, rng);
    const Tensor fast = g.value(marginal(g, rg.graph, rg.query, rg.evidence));
    const Tensor slow = brute_force_marginal(g, rg.graph, rg.query, rg.evidence);
    ASSERT_EQ(fast.shape(), slow.shape());
    for (std::size_t i = 0; i < fast.size(); ++i) EXPECT_NEAR(fast[i], slow[i], 1e-10);
    double total = 0.0;
    for (double v : slow.data()) total += v;
    if (total > 0.0) {
      const Tensor norm = g.value(marginal(g, rg.graph, rg.query, rg.evidence, true));
      double mass = 0.0;
      for (double v : norm.data()) {
        EXPECT_GE(v, 0.0);
        mass += v;
      }
      EXPECT_NEAR(mass, 1.0, 1e-9);
    }
  }
}

TEST(BruteForce, RefusesHugeStateSpaces) {
  Graph g;
  FactorGraph fg;
  for (const char* v : {"a", "b", "c"}) fg.add_variable(v, 200);
  fg.add_factor(g, {"a", "b"}, g.constant(Tensor(Shape{200, 200}, 1.0)));
  fg.add_factor(g, {"b", "c"}, g.constant(Tensor(Shape{200, 200}, 1.0)));
  EXPECT_THROW(brute_force_marginal(g, fg, "a"), CapacityError);
}

TEST(CheckDistributions, ReportsViolations) {
  Graph g;
  FactorGraph fg;
  fg.add_variable("a", 2);
  fg.add_variable("b", 2);
  fg.add_factor(g, {"a", "b"}, g.constant(Tensor::matrix({{0.5, 0.5}, {0.9, 0.3}})), 1);
  EXPECT_EQ(check_distributions(g, fg).size(), 1u);
}

}  // namespace
}  // namespace igraph
