#pragma once

// Kernel table shared by the scalar reference and the vector builds. This
// header is included by translation units compiled with wider instruction
// sets, so it must stay free of inline library code.

#include <cstddef>

namespace wgeo::simd {

enum class SimdLevel { scalar, avx2, avx512 };

/// C[m x n] = (accumulate ? C : 0) + A[m x k] * B[k x n]; row-major with leading dimensions.
using GemmFn = void (*)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                        std::size_t lda, const double* b, std::size_t ldb, double* c,
                        std::size_t ldc, bool accumulate);
/// C[m x n] = (accumulate ? C : 0) + A^T * B with A stored k x m and B k x n.
using GemmTnFn = GemmFn;
/// y[i] = tanh(x[i]); x and y may alias.
using TanhFn = void (*)(std::size_t n, const double* x, double* y);

struct KernelTable {
  SimdLevel level;
  const char* name;
  GemmFn gemm;
  GemmTnFn gemm_tn;
  TanhFn tanh;
};

namespace detail {
const KernelTable* scalar_kernels();
const KernelTable* avx2_kernels();
const KernelTable* avx512_kernels();
}  // namespace detail

}  // namespace wgeo::simd
