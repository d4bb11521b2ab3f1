#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>

#include "igraph/autodiff.hpp"

namespace igraph {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Coordinates whose ±ε evaluations landed on a different smooth piece
  // (an abs() input changed sign or a recorded branch flipped).
  std::size_t skipped = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

using LossBuilder = std::function<NodeId(Graph&)>;

// Central differences (f(θ+ε) − f(θ−ε)) / 2ε against the analytic gradient of
// one store parameter. Relative error uses max(|a|, |b|, floor) as denominator.
// `coords` restricts the sweep; empty means every coordinate. The store is
// restored exactly on return.
GradCheckResult finite_diff_check(ParameterStore& params, const LossBuilder& build,
                                  std::string_view param, double eps = 1e-5,
                                  std::span<const std::size_t> coords = {},
                                  double floor = 1e-8);

}  // namespace igraph
