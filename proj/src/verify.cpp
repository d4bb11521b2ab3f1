#include "igraph/verify.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "igraph/error.hpp"
#include "igraph/factor_graph.hpp"
#include "igraph/gradcheck.hpp"
#include "igraph/oracles.hpp"
#include "igraph/recommender.hpp"
#include "igraph/textclf.hpp"

namespace igraph::verify {
namespace {

constexpr double kGradTol = 1e-4;
constexpr double kFdEps = 1e-5;

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(shape);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

void record(CheckResult& r, double error, const std::string& what) {
  r.worst = std::max(r.worst, error);
  if (!(error <= r.tolerance)) {
    std::ostringstream os;
    os << what << ": error " << error << " exceeds " << r.tolerance;
    r.failures.push_back(os.str());
  }
}

CheckResult start(std::string suite, double tolerance) {
  CheckResult r;
  r.suite = std::move(suite);
  r.tolerance = tolerance;
  return r;
}

void finish(CheckResult& r, const Timer& t) {
  r.passed = r.failures.empty();
  r.seconds = t.seconds();
}

std::string fmt_check(const GradCheckResult& res) {
  std::ostringstream os;
  os << " (coord " << res.worst_index << ": analytic " << res.worst_analytic << " vs numeric "
     << res.worst_numeric << ")";
  return os.str();
}

// One gradient-check case: random inputs named "a", "b", ... and a builder
// producing the op under test.
struct OpCase {
  std::string name;
  std::vector<std::pair<std::string, Shape>> inputs;
  std::function<NodeId(Graph&)> op;
  double lo = -1.0;
  double hi = 1.0;
};

std::vector<OpCase> op_cases() {
  auto p = [](Graph& g, const char* n) { return g.parameter(n); };
  std::vector<OpCase> cases;
  cases.push_back({"matmul", {{"a", {3, 4}}, {"b", {4, 2}}},
                   [=](Graph& g) { return g.matmul(p(g, "a"), p(g, "b")); }});
  cases.push_back({"matmul_vector", {{"a", {3, 4}}, {"b", {4}}},
                   [=](Graph& g) { return g.matmul(p(g, "a"), p(g, "b")); }});
  cases.push_back({"softmax_axis0", {{"a", {3, 4}}}, [=](Graph& g) { return g.softmax(p(g, "a"), 0); }});
  cases.push_back({"softmax_axis1", {{"a", {2, 3, 4}}}, [=](Graph& g) { return g.softmax(p(g, "a"), 1); }});
  cases.push_back({"add_broadcast", {{"a", {3, 4}}, {"b", {4}}},
                   [=](Graph& g) { return g.add(p(g, "a"), p(g, "b")); }});
  cases.push_back({"sub_broadcast", {{"a", {2, 1, 3}}, {"b", {4, 1}}},
                   [=](Graph& g) { return g.sub(p(g, "a"), p(g, "b")); }});
  cases.push_back({"mul_broadcast", {{"a", {2, 3, 1}}, {"b", {1, 3, 4}}},
                   [=](Graph& g) { return g.mul(p(g, "a"), p(g, "b")); }});
  cases.push_back({"mul_scalar", {{"a", {3, 2}}, {"b", {}}},
                   [=](Graph& g) { return g.mul(p(g, "a"), p(g, "b")); }});
  cases.push_back({"div", {{"a", {3, 4}}, {"b", {3, 1}}},
                   [=](Graph& g) { return g.div(p(g, "a"), p(g, "b")); }, 0.5, 2.0});
  cases.push_back({"exp", {{"a", {3, 4}}}, [=](Graph& g) { return g.exp(p(g, "a")); }});
  cases.push_back({"log", {{"a", {3, 4}}}, [=](Graph& g) { return g.log(p(g, "a")); }, 0.5, 2.0});
  cases.push_back({"neg", {{"a", {5}}}, [=](Graph& g) { return g.neg(p(g, "a")); }});
  cases.push_back({"abs", {{"a", {3, 4}}}, [=](Graph& g) { return g.abs(p(g, "a")); }});
  cases.push_back({"scale", {{"a", {3, 4}}}, [=](Graph& g) { return g.scale(p(g, "a"), -1.7); }});
  cases.push_back({"tanh", {{"a", {3, 4}}}, [=](Graph& g) { return g.tanh(p(g, "a")); }});
  cases.push_back({"sigmoid", {{"a", {3, 4}}}, [=](Graph& g) { return g.sigmoid(p(g, "a")); }});
  cases.push_back({"concat", {{"a", {3}}, {"b", {2}}},
                   [=](Graph& g) { return g.concat(p(g, "a"), p(g, "b")); }});
  cases.push_back({"gather", {{"a", {4, 3}}}, [=](Graph& g) { return g.add(g.gather(p(g, "a"), 2), g.gather(p(g, "a"), 2)); }});
  cases.push_back({"reduce_sum_axis0", {{"a", {3, 4, 2}}}, [=](Graph& g) { return g.reduce_sum(p(g, "a"), 0); }});
  cases.push_back({"reduce_sum_axis1", {{"a", {3, 4, 2}}}, [=](Graph& g) { return g.reduce_sum(p(g, "a"), 1); }});
  cases.push_back({"reduce_sum_axis2", {{"a", {3, 4, 2}}}, [=](Graph& g) { return g.reduce_sum(p(g, "a"), 2); }});
  cases.push_back({"reshape", {{"a", {3, 4}}}, [=](Graph& g) { return g.reshape(p(g, "a"), {2, 6}); }});
  cases.push_back({"permute", {{"a", {2, 3, 4}}}, [=](Graph& g) { return g.permute(p(g, "a"), {2, 0, 1}); }});
  cases.push_back({"slice", {{"a", {6}}}, [=](Graph& g) { return g.slice(p(g, "a"), 2, 3); }});
  cases.push_back({"stack", {{"a", {4}}, {"b", {4}}}, [=](Graph& g) {
                     const NodeId parts[] = {p(g, "a"), p(g, "b"), p(g, "a")};
                     return g.stack(parts);
                   }});
  return cases;
}

}  // namespace

CheckResult op_gradients(const Options& opts) {
  Timer timer;
  CheckResult result = start("op_gradients", kGradTol);
  std::mt19937_64 rng(opts.seed);
  for (const OpCase& c : op_cases()) {
    for (std::size_t point = 0; point < opts.gradient_points; ++point) {
      ParameterStore store;
      for (const auto& [name, shape] : c.inputs) store.add(name, random_tensor(shape, rng, c.lo, c.hi));
      Tensor weights;
      {
        Graph probe(&store);
        weights = random_tensor(probe.shape(c.op(probe)), rng, 0.5, 1.5);
      }
      const LossBuilder build = [&](Graph& g) {
        return g.sum_all(g.mul(c.op(g), g.constant(weights)));
      };
      for (const auto& [name, _] : c.inputs) {
        const GradCheckResult res = finite_diff_check(store, build, name, kFdEps);
        ++result.cases;
        if (res.checked == 0) {
          result.failures.push_back(c.name + "/" + name + ": no smooth coordinate checked");
          continue;
        }
        record(result, res.max_rel_error, c.name + "/" + name + " point " + std::to_string(point) + fmt_check(res));
      }
    }
  }
  finish(result, timer);
  return result;
}

CheckResult recommender_gradients(const Options& opts) {
  Timer timer;
  CheckResult result = start("recommender_gradients", kGradTol);
  rec::HyperParams hp;
  hp.num_users = 3;
  hp.num_items = 3;
  hp.k = 2;
  hp.num_features = 2;
  hp.num_categories = 2;
  hp.num_ratings = 5;
  hp.sigma = 0.5;
  // Band covering every reachable rating so the diversity network is exercised.
  hp.diversity_lower = 1.0;
  hp.diversity_upper = 5.0;
  hp.category_hidden = {8};
  hp.feature_hidden = {8};
  hp.diversity_hidden = {8};
  std::mt19937_64 rng(opts.seed + 1);
  std::uniform_real_distribution<double> rating(1.0, 5.0);
  std::uniform_real_distribution<double> omega(0.5, 2.0);
  for (std::size_t point = 0; point < opts.gradient_points; ++point) {
    ParameterStore params = rec::init_params(hp, opts.seed + 100 + point, {0.7, 1.0, 1.0});
    for (const char* name : {rec::names::kOmegaUser, rec::names::kOmegaItem}) {
      for (double& v : params.at(name).data()) v = omega(rng);
    }
    std::vector<Rating> batch;
    for (std::size_t u = 0; u < hp.num_users; ++u) {
      for (std::size_t t = 0; t < hp.num_items; ++t) batch.push_back({u, t, rating(rng), 0});
    }
    const LossBuilder build = [&](Graph& g) {
      rec::RecommenderGraph model(g, hp);
      return model.loss_batch(batch);
    };
    std::vector<std::string> groups;
    for (const auto& [name, _] : params.entries()) groups.push_back(name);
    for (const auto& name : groups) {
      const GradCheckResult res = finite_diff_check(params, build, name, kFdEps);
      ++result.cases;
      if (res.checked == 0) {
        result.failures.push_back(name + ": no smooth coordinate checked");
        continue;
      }
      record(result, res.max_rel_error, name + " point " + std::to_string(point) + fmt_check(res));
    }
  }
  finish(result, timer);
  return result;
}

CheckResult textclf_gradients(const Options& opts) {
  Timer timer;
  CheckResult result = start("textclf_gradients", kGradTol);
  const textclf::Dims dims{5, 3, 4, 2, 2};
  std::mt19937_64 rng(opts.seed + 2);
  std::uniform_int_distribution<std::size_t> token(0, dims.vocab - 1);
  for (std::size_t point = 0; point < opts.gradient_points; ++point) {
    ParameterStore params = textclf::init_params(dims, opts.seed + 200 + point);
    textclf::Document doc{{token(rng), token(rng), token(rng)}, point % 2};
    const LossBuilder build = [&](Graph& g) {
      return textclf::cross_entropy(g, textclf::forward(g, dims, doc), doc.label);
    };
    {
      Graph g(&params);
      const Gradients grads = g.backward(build(g));
      double encoder = 0.0;
      for (double v : grads.at(textclf::names::kEncoderWeight).data()) encoder = std::max(encoder, std::fabs(v));
      if (!(encoder > 0.0)) result.failures.push_back("encoder gradient is zero at point " + std::to_string(point));
    }
    std::vector<std::string> groups;
    for (const auto& [name, _] : params.entries()) groups.push_back(name);
    for (const auto& name : groups) {
      // Some recurrent weights have gradients near 1e-8, where the central
      // difference carries ~1e-11 of roundoff; below 1e-6 the error is
      // judged relative to 1e-6 instead.
      const GradCheckResult res = finite_diff_check(params, build, name, kFdEps, {}, 1e-6);
      ++result.cases;
      record(result, res.max_rel_error, name + " point " + std::to_string(point) + fmt_check(res));
    }
  }
  finish(result, timer);
  return result;
}

CheckResult sum_product_exactness(const Options& opts) {
  Timer timer;
  CheckResult result = start("sum_product_exactness", 1e-10);
  std::mt19937_64 rng(opts.seed + 3);
  for (std::size_t trial = 0; trial < opts.random_graphs; ++trial) {
    Graph g;
    auto rg = oracle::random_tree_graph(g, rng);
    const Tensor fast = g.value(marginal(g, rg.graph, rg.query, rg.evidence));
    const Tensor slow = brute_force_marginal(g, rg.graph, rg.query, rg.evidence);
    double err = 0.0;
    for (std::size_t i = 0; i < fast.size(); ++i) err = std::max(err, std::fabs(fast[i] - slow[i]));
    const Tensor norm = g.value(marginal(g, rg.graph, rg.query, rg.evidence, true));
    double mass = 0.0;
    for (double v : norm.data()) mass += v;
    // A clamped graph whose evidence has zero mass cannot be normalized.
    double total = 0.0;
    for (double v : slow.data()) total += v;
    if (total > 0.0) err = std::max(err, std::fabs(mass - 1.0) * 1e-1);
    ++result.cases;
    record(result, err, "graph " + std::to_string(trial) + " query " + rg.query);
  }
  finish(result, timer);
  return result;
}

namespace {

rec::HyperParams random_hyper(std::mt19937_64& rng) {
  const std::size_t fc[] = {1, 2, 3, 5};
  const std::size_t rs[] = {2, 5};
  std::uniform_int_distribution<std::size_t> pick4(0, 3);
  std::uniform_int_distribution<std::size_t> pick2(0, 1);
  rec::HyperParams hp;
  hp.num_users = 2;
  hp.num_items = 2;
  hp.k = 3;
  hp.num_features = fc[pick4(rng)];
  hp.num_categories = fc[pick4(rng)];
  hp.num_ratings = rs[pick2(rng)];
  hp.sigma = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
  hp.diversity_lower = 1.0;
  hp.diversity_upper = static_cast<double>(hp.num_ratings);
  hp.category_hidden = {6};
  hp.feature_hidden = {6};
  hp.diversity_hidden = {6};
  return hp;
}

}  // namespace

CheckResult mixture_oracle(const Options& opts) {
  Timer timer;
  CheckResult result = start("mixture_oracle", 1e-10);
  std::mt19937_64 rng(opts.seed + 4);
  for (std::size_t draw = 0; draw < opts.mixture_draws; ++draw) {
    const rec::HyperParams hp = random_hyper(rng);
    const ParameterStore params = rec::init_params(hp, rng(), {1.0, 1.5, 1.0});
    const std::size_t u = rng() % hp.num_users;
    const std::size_t t = rng() % hp.num_items;
    Graph g(&params);
    rec::RecommenderGraph model(g, hp);
    const NodeId entry = model.entry_embedding(u, t);
    const NodeId pf = model.feature_mixture(entry);
    const auto [pz, py] = model.category_distributions(entry);
    const Tensor phat = g.value(model.preference_distribution(u, t));
    const auto expected =
        oracle::preference_triple_sum(g.value(pf), g.value(pz), g.value(py), g.value(model.tau()), hp.sigma);
    double err = phat.size() == hp.num_ratings ? 0.0 : 1.0;
    for (std::size_t p = 0; p < expected.size() && p < phat.size(); ++p) {
      err = std::max(err, std::fabs(phat[p] - expected[p]));
    }
    ++result.cases;
    record(result, err,
           "draw " + std::to_string(draw) + " (F=" + std::to_string(hp.num_features) +
               ", C=" + std::to_string(hp.num_categories) + ", R=" + std::to_string(hp.num_ratings) + ")");
  }
  finish(result, timer);
  return result;
}

CheckResult normalization_bounds(const Options& opts) {
  Timer timer;
  CheckResult result = start("normalization_bounds", 1e-9);
  std::mt19937_64 rng(opts.seed + 5);

  auto stochastic_gap = [](const Tensor& t, std::size_t axis) {
    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= t.shape()[d];
    for (std::size_t d = axis + 1; d < t.rank(); ++d) inner *= t.shape()[d];
    const std::size_t len = t.shape()[axis];
    double gap = 0.0;
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < inner; ++i) {
        double total = 0.0;
        for (std::size_t l = 0; l < len; ++l) {
          const double v = t[(o * len + l) * inner + i];
          if (v < 0.0) gap = std::max(gap, 1.0);
          total += v;
        }
        gap = std::max(gap, std::fabs(total - 1.0));
      }
    }
    return gap;
  };

  for (std::size_t draw = 0; draw < opts.mixture_draws; ++draw) {
    const rec::HyperParams hp = random_hyper(rng);
    const ParameterStore params = rec::init_params(hp, rng(), {1.0, 1.5, 1.0});
    Graph g(&params);
    rec::RecommenderGraph model(g, hp);
    const std::size_t u = rng() % hp.num_users;
    const std::size_t t = rng() % hp.num_items;
    const NodeId entry = model.entry_embedding(u, t);
    const auto [pz, py] = model.category_distributions(entry);
    double gap = stochastic_gap(g.value(model.feature_mixture(entry)), 0);
    gap = std::max(gap, stochastic_gap(g.value(pz), 1));
    gap = std::max(gap, stochastic_gap(g.value(py), 1));
    gap = std::max(gap, stochastic_gap(g.value(model.tau()), 3));
    const Tensor phat = g.value(model.preference_distribution(u, t));
    for (double v : phat.data()) {
      if (!(v > 0.0 && v <= 1.0)) gap = std::max(gap, 1.0);
    }
    ++result.cases;
    record(result, gap, "distributions of draw " + std::to_string(draw));
  }

  std::uniform_int_distribution<std::size_t> levels(2, 7);
  std::uniform_real_distribution<double> unit(1e-6, 1.0);
  std::uniform_real_distribution<double> omega(-5.0, 5.0);
  std::size_t out_of_range = 0;
  for (std::size_t s = 0; s < opts.bound_samples; ++s) {
    const std::size_t r = levels(rng);
    Tensor phat(Shape{r});
    for (double& v : phat.data()) v = unit(rng);
    Graph g;
    const double value = g.value(rec::expected_rating(g, g.constant(phat), g.constant(Tensor::scalar(omega(rng))),
                                                   g.constant(Tensor::scalar(omega(rng)))))[0];
    if (!(value >= 1.0 && value <= static_cast<double>(r))) ++out_of_range;
    ++result.cases;
  }
  if (out_of_range) result.failures.push_back(std::to_string(out_of_range) + " expected ratings outside [1, |R|]");

  for (std::size_t r = 2; r <= 10; ++r) {
    Graph g;
    const double c = unit(rng);
    const double value = g.value(rec::expected_rating(g, g.constant(Tensor(Shape{r}, c)),
                                                   g.constant(Tensor::scalar(omega(rng))),
                                                   g.constant(Tensor::scalar(omega(rng)))))[0];
    const double err = std::fabs(value - (static_cast<double>(r) + 1.0) / 2.0);
    ++result.cases;
    if (err > 1e-12) result.failures.push_back("constant p-hat with |R|=" + std::to_string(r) + " gave " + std::to_string(value));
  }
  finish(result, timer);
  return result;
}

CheckResult diversity_gate(const Options& opts) {
  Timer timer;
  CheckResult result = start("diversity_gate", 0.0);
  rec::HyperParams hp;
  hp.num_users = 2;
  hp.num_items = 4;
  hp.k = 3;
  hp.num_features = 2;
  hp.num_categories = 3;
  hp.num_ratings = 5;
  hp.diversity_lower = 2.5;
  hp.diversity_upper = 3.5;
  ParameterStore params = rec::init_params(hp, opts.seed + 6, {0.5, 0.5, 1.0});
  std::mt19937_64 rng(opts.seed + 7);
  std::uniform_real_distribution<double> any(0.5, 5.5);
  std::uniform_real_distribution<double> band(hp.diversity_lower, hp.diversity_upper);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto adjust = [&](const ParameterStore& store, double r) {
    Graph g(&store);
    rec::RecommenderGraph model(g, hp);
    Tensor phat(Shape{hp.num_ratings});
    for (double& v : phat.data()) v = unit(rng);
    const std::size_t item = rng() % hp.num_items;
    return g.value(model.diversity_adjust(g.constant(Tensor::scalar(r)), g.constant(phat), item))[0];
  };

  std::size_t mismatches = 0;
  for (std::size_t s = 0; s < opts.gate_samples; ++s) {
    double r = any(rng);
    if (s == 0) r = std::nextafter(hp.diversity_lower, -INFINITY);
    if (s == 1) r = std::nextafter(hp.diversity_upper, INFINITY);
    while (r >= hp.diversity_lower && r <= hp.diversity_upper) r = any(rng);
    if (std::bit_cast<std::uint64_t>(adjust(params, r)) != std::bit_cast<std::uint64_t>(r)) ++mismatches;
    ++result.cases;
  }
  if (mismatches) result.failures.push_back(std::to_string(mismatches) + " off-band outputs differ from input");

  ParameterStore zeroed = params;
  for (auto& [name, t] : zeroed.entries()) {
    if (name.rfind(rec::names::kDiversityNet, 0) == 0) {
      for (double& v : t.data()) v = 0.0;
    }
  }
  mismatches = 0;
  std::size_t active_changed = 0;
  for (std::size_t s = 0; s < opts.gate_samples; ++s) {
    const double r = s == 0 ? hp.diversity_lower : (s == 1 ? hp.diversity_upper : band(rng));
    if (std::bit_cast<std::uint64_t>(adjust(zeroed, r)) != std::bit_cast<std::uint64_t>(r)) ++mismatches;
    if (adjust(params, r) != r) ++active_changed;
    ++result.cases;
  }
  if (mismatches) result.failures.push_back(std::to_string(mismatches) + " in-band outputs with a zero network differ from input");
  // With a nonzero network the in-band correction must actually fire.
  if (active_changed == 0) result.failures.push_back("in-band correction never applied");
  finish(result, timer);
  return result;
}

std::vector<CheckResult> run_all(const Options& opts) {
  return {op_gradients(opts),        recommender_gradients(opts), textclf_gradients(opts),
          sum_product_exactness(opts), mixture_oracle(opts),      normalization_bounds(opts),
          diversity_gate(opts)};
}

}  // namespace igraph::verify
