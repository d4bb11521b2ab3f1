#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

// Inner-loop arithmetic used by the autodiff ops. Each instruction set gets
// its own implementation of the same table; one is selected at startup
// (best available) and can be overridden for equivalence testing.
namespace igraph::kernels {

enum class Isa { kScalar, kAvx2 };

struct Table {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // out += a * b
  void (*mul_acc)(const double* a, const double* b, double* out, std::size_t n);
  void (*scale)(double alpha, const double* x, double* out, std::size_t n);
};

std::string_view isa_name(Isa isa);
bool isa_available(Isa isa);
std::vector<Isa> available_isas();

// Throws ConfigError when the ISA was not compiled in or the CPU lacks it.
void select_isa(Isa isa);
Isa active_isa();

const Table& table(Isa isa);
const Table& active();

// Row-major dense products, accumulating into the output.
// c[m×p] += a[m×n] · b[n×p]
void gemm_nn(std::size_t m, std::size_t n, std::size_t p, const double* a, const double* b,
             double* c);
// c[m×n] += a[m×p] · b[n×p]ᵀ
void gemm_nt(std::size_t m, std::size_t n, std::size_t p, const double* a, const double* b,
             double* c);
// c[n×p] += a[m×n]ᵀ · b[m×p]
void gemm_tn(std::size_t m, std::size_t n, std::size_t p, const double* a, const double* b,
             double* c);

namespace detail {
extern const Table kScalarTable;
#if defined(IGRAPH_HAVE_AVX2)
extern const Table kAvx2Table;
#endif
}  // namespace detail

}  // namespace igraph::kernels
