#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "igraph/error.hpp"
#include "igraph/kernels.hpp"
#include "igraph/tensor.hpp"

namespace igraph {
namespace {

TEST(Tensor, ShapeAndSize) {
  Tensor t(Shape{2, 3}, 1.5);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.at({1, 2}), 1.5);
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  EXPECT_THROW(t.at({2, 0}), IndexError);
}

TEST(Tensor, FactoriesAndReshape) {
  const Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
  EXPECT_EQ(m.shape(), (Shape{2, 2}));
  EXPECT_EQ(m.at({1, 0}), 3.0);
  EXPECT_EQ(Tensor::identity(3).at({2, 2}), 1.0);
  EXPECT_EQ(Tensor::scalar(7).rank(), 0u);
  EXPECT_EQ(m.reshaped({4}), Tensor::vector({1, 2, 3, 4}));
  EXPECT_THROW(m.reshaped({3}), DimensionError);
}

class KernelEquivalence : public ::testing::TestWithParam<std::size_t> {};

// Every kernel variant must agree with the scalar reference. Sums may be
// reassociated, so reductions compare with a relative bound; elementwise
// kernels must match exactly (FMA rounding aside for axpy/mul_acc).
TEST_P(KernelEquivalence, MatchesScalarReference) {
  const std::size_t n = GetParam();
  std::mt19937_64 rng(n + 1);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::vector<double> a(n), b(n);
  for (auto& v : a) v = dist(rng);
  for (auto& v : b) v = dist(rng);
  const auto& ref = kernels::table(kernels::Isa::kScalar);
  for (kernels::Isa isa : kernels::available_isas()) {
    SCOPED_TRACE(std::string(kernels::isa_name(isa)));
    const auto& k = kernels::table(isa);
    double scale_ref = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale_ref += std::abs(a[i] * b[i]);
    EXPECT_NEAR(k.dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), 1e-14 * (1.0 + scale_ref));
    EXPECT_NEAR(k.sum(a.data(), n), ref.sum(a.data(), n), 1e-14 * (1.0 + 2.0 * static_cast<double>(n)));

    auto run = [&](auto fn) {
      std::vector<double> x(n), y(n);
      fn(ref, x);
      fn(k, y);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(x[i], y[i], 1e-15 * (1.0 + std::abs(x[i]))) << i;
    };
    run([&](const kernels::Table& t, std::vector<double>& out) { t.add(a.data(), b.data(), out.data(), n); });
    run([&](const kernels::Table& t, std::vector<double>& out) { t.sub(a.data(), b.data(), out.data(), n); });
    run([&](const kernels::Table& t, std::vector<double>& out) { t.mul(a.data(), b.data(), out.data(), n); });
    run([&](const kernels::Table& t, std::vector<double>& out) { t.scale(-0.7, a.data(), out.data(), n); });
    run([&](const kernels::Table& t, std::vector<double>& out) {
      out = b;
      t.axpy(1.3, a.data(), out.data(), n);
    });
    run([&](const kernels::Table& t, std::vector<double>& out) {
      out = a;
      t.mul_acc(a.data(), b.data(), out.data(), n);
    });
  }
}

INSTANTIATE_TEST_SUITE_P(Lengths, KernelEquivalence,
                         ::testing::Values(0, 1, 3, 4, 5, 7, 8, 9, 16, 31, 64, 100, 1027));

TEST(Kernels, GemmVariantsAgreeWithNaive) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (std::size_t p : {1u, 2u, 5u}) {
    const std::size_t m = 3, n = 4;
    std::vector<double> a(m * n), b(n * p), c(m * p, 0.0);
    for (auto& v : a) v = dist(rng);
    for (auto& v : b) v = dist(rng);
    kernels::gemm_nn(m, n, p, a.data(), b.data(), c.data());
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        double s = 0.0;
        for (std::size_t l = 0; l < n; ++l) s += a[i * n + l] * b[l * p + j];
        EXPECT_NEAR(c[i * p + j], s, 1e-14);
      }
    }
    // gemm_nt: C[m×n] += G[m×p] · B[n×p]^T with G = c.
    std::vector<double> ga(m * n, 0.0);
    kernels::gemm_nt(m, n, p, c.data(), b.data(), ga.data());
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t l = 0; l < n; ++l) {
        double s = 0.0;
        for (std::size_t j = 0; j < p; ++j) s += c[i * p + j] * b[l * p + j];
        EXPECT_NEAR(ga[i * n + l], s, 1e-14);
      }
    }
    // gemm_tn: C[n×p] += A[m×n]^T · G[m×p].
    std::vector<double> gb(n * p, 0.0);
    kernels::gemm_tn(m, n, p, a.data(), c.data(), gb.data());
    for (std::size_t l = 0; l < n; ++l) {
      for (std::size_t j = 0; j < p; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += a[i * n + l] * c[i * p + j];
        EXPECT_NEAR(gb[l * p + j], s, 1e-14);
      }
    }
  }
}

TEST(Kernels, SelectIsa) {
  const kernels::Isa before = kernels::active_isa();
  kernels::select_isa(kernels::Isa::kScalar);
  EXPECT_EQ(kernels::active_isa(), kernels::Isa::kScalar);
  if (!kernels::isa_available(kernels::Isa::kAvx2)) {
    EXPECT_THROW(kernels::select_isa(kernels::Isa::kAvx2), ConfigError);
  }
  kernels::select_isa(before);
}

}  // namespace
}  // namespace igraph
