#include "igraph/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "igraph/error.hpp"

namespace igraph {
namespace {

struct Eval {
  double loss;
  std::vector<int> signature;
};

Eval evaluate(const ParameterStore& params, const LossBuilder& build) {
  Graph g(&params);
  const NodeId loss = build(g);
  const Tensor& v = g.value(loss);
  if (v.size() != 1) throw ContractError("gradient check: loss is not a scalar");
  return {v[0], g.nonsmooth_signature()};
}

}  // namespace

GradCheckResult finite_diff_check(ParameterStore& params, const LossBuilder& build,
                                  std::string_view param, double eps,
                                  std::span<const std::size_t> coords, double floor) {
  if (!(eps > 0.0)) throw ConfigError("gradient check: eps must be positive");
  Tensor analytic;
  std::vector<int> base_signature;
  {
    Graph g(&params);
    const NodeId loss = build(g);
    analytic = g.backward(loss).at(std::string(param));
    base_signature = g.nonsmooth_signature();
  }

  Tensor& theta = params.at(param);
  std::vector<std::size_t> sweep(coords.begin(), coords.end());
  if (sweep.empty()) {
    sweep.resize(theta.size());
    std::iota(sweep.begin(), sweep.end(), std::size_t{0});
  }

  GradCheckResult result;
  for (std::size_t c : sweep) {
    if (c >= theta.size()) throw IndexError("gradient check: coordinate out of range");
    const double saved = theta[c];
    theta[c] = saved + eps;
    const Eval plus = evaluate(params, build);
    theta[c] = saved - eps;
    const Eval minus = evaluate(params, build);
    theta[c] = saved;
    if (plus.signature != base_signature || minus.signature != base_signature) {
      ++result.skipped;
      continue;
    }
    const double numeric = (plus.loss - minus.loss) / (2.0 * eps);
    const double a = analytic[c];
    const double denom = std::max({std::fabs(a), std::fabs(numeric), floor});
    const double rel = std::fabs(a - numeric) / denom;
    ++result.checked;
    if (rel > result.max_rel_error || result.checked == 1) {
      result.max_rel_error = std::max(result.max_rel_error, rel);
      if (rel >= result.max_rel_error) {
        result.worst_index = c;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace igraph
