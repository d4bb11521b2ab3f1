#include <gtest/gtest.h>

#include <set>

#include "igraph/autodiff.hpp"
#include "igraph/verify.hpp"

namespace igraph::verify {
namespace {

Options quick() {
  Options o;
  o.gradient_points = 2;
  o.random_graphs = 30;
  o.mixture_draws = 10;
  o.bound_samples = 100;
  o.gate_samples = 100;
  return o;
}

TEST(Verify, PristineBuildPasses) {
  const auto results = run_all(quick());
  std::set<std::string> names;
  for (const auto& r : results) {
    EXPECT_TRUE(r.passed) << r.suite << ": " << (r.failures.empty() ? "" : r.failures.front());
    EXPECT_GT(r.cases, 0u) << r.suite;
    names.insert(r.suite);
  }
  EXPECT_EQ(names, (std::set<std::string>{"op_gradients", "recommender_gradients", "textclf_gradients",
                                          "sum_product_exactness", "mixture_oracle", "normalization_bounds",
                                          "diversity_gate"}));
}

class InjectedFault : public ::testing::TestWithParam<OpKind> {};

TEST_P(InjectedFault, GradientSuiteFails) {
  set_gradient_fault(GetParam());
  const CheckResult r = op_gradients(quick());
  set_gradient_fault(std::nullopt);
  EXPECT_FALSE(r.passed);
  EXPECT_FALSE(r.failures.empty());
}

INSTANTIATE_TEST_SUITE_P(EveryOp, InjectedFault,
                         ::testing::Values(OpKind::kMatmul, OpKind::kSoftmax, OpKind::kAdd, OpKind::kSub,
                                           OpKind::kMul, OpKind::kDiv, OpKind::kExp, OpKind::kLog,
                                           OpKind::kNeg, OpKind::kAbs, OpKind::kScale, OpKind::kTanh,
                                           OpKind::kSigmoid, OpKind::kConcat, OpKind::kGather,
                                           OpKind::kReduceSum, OpKind::kReshape, OpKind::kPermute,
                                           OpKind::kSlice, OpKind::kStack),
                         [](const auto& info) { return std::string(op_name(info.param)); });

TEST(Verify, FaultInMatchingPathBreaksRecommenderCheck) {
  set_gradient_fault(OpKind::kAbs);
  Options o = quick();
  o.gradient_points = 1;
  const CheckResult r = recommender_gradients(o);
  set_gradient_fault(std::nullopt);
  EXPECT_FALSE(r.passed);
}

}  // namespace
}  // namespace igraph::verify
