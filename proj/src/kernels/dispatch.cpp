#include <atomic>

#include "igraph/error.hpp"
#include "igraph/kernels.hpp"

namespace igraph::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(IGRAPH_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa best_isa() { return cpu_has_avx2() ? Isa::kAvx2 : Isa::kScalar; }

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> slot{best_isa()};
  return slot;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
      return cpu_has_avx2();
  }
  return false;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::kScalar};
  if (isa_available(Isa::kAvx2)) out.push_back(Isa::kAvx2);
  return out;
}

void select_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw ConfigError("instruction set '" + std::string(isa_name(isa)) +
                      "' is not available on this build/CPU");
  }
  active_slot().store(isa);
}

Isa active_isa() { return active_slot().load(); }

const Table& table(Isa isa) {
#if defined(IGRAPH_HAVE_AVX2)
  if (isa == Isa::kAvx2) return detail::kAvx2Table;
#else
  (void)isa;
#endif
  return detail::kScalarTable;
}

const Table& active() { return table(active_isa()); }

void gemm_nn(std::size_t m, std::size_t n, std::size_t p, const double* a, const double* b,
             double* c) {
  const Table& k = active();
  // Matrix-vector products dominate the model; p == 1 would otherwise run
  // length-1 axpys.
  if (p == 1) {
    for (std::size_t i = 0; i < m; ++i) c[i] += k.dot(a + i * n, b, n);
    return;
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t l = 0; l < n; ++l) {
      const double s = a[i * n + l];
      k.axpy(s, b + l * p, c + i * p, p);
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t p, const double* a, const double* b,
             double* c) {
  const Table& k = active();
  if (p == 1) {
    for (std::size_t i = 0; i < m; ++i) k.axpy(a[i], b, c + i * n, n);
    return;
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] += k.dot(a + i * p, b + j * p, p);
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t p, const double* a, const double* b,
             double* c) {
  const Table& k = active();
  if (p == 1) {
    for (std::size_t i = 0; i < m; ++i) k.axpy(b[i], a + i * n, c, n);
    return;
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t l = 0; l < n; ++l) {
      const double s = a[i * n + l];
      k.axpy(s, b + i * p, c + l * p, p);
    }
  }
}

}  // namespace igraph::kernels
