// AVX-512F + FMA kernels. Built with -mavx512f -mfma; reached only through dispatch.

#include <immintrin.h>

#include <cstdint>

#include "wgeo/simd/kernels.hpp"

namespace wgeo::simd {
namespace {

constexpr std::size_t kRows = 12;
constexpr std::size_t kVecs = 2;  // 16 columns per panel
constexpr std::size_t kCols = 8 * kVecs;

// One MR x (8 NV) tile of C, NV in {1, 2}; lanes past the matrix edge are
// masked off. Element (i, p) of A lives at a[i * rs + p * ks]. The two
// accumulator sets are separate arrays so they stay in registers.
template <std::size_t MR, std::size_t NV>
inline void gemm_tile(std::size_t k, const double* a, std::size_t rs, std::size_t ks,
                      const double* b, std::size_t ldb, double* c, std::size_t ldc,
                      bool accumulate, __mmask8 mask_lo, __mmask8 mask_hi) {
  __m512d acc_lo[MR], acc_hi[MR];
#pragma GCC unroll 16
  for (std::size_t i = 0; i < MR; ++i) {
    acc_lo[i] = _mm512_setzero_pd();
    acc_hi[i] = _mm512_setzero_pd();
  }
  for (std::size_t p = 0; p < k; ++p) {
    const double* bp = b + p * ldb;
    const __m512d b_lo = _mm512_maskz_loadu_pd(mask_lo, bp);
    const __m512d b_hi = NV > 1 ? _mm512_maskz_loadu_pd(mask_hi, bp + 8) : _mm512_setzero_pd();
  #pragma GCC unroll 16
  for (std::size_t i = 0; i < MR; ++i) {
      const __m512d ai = _mm512_set1_pd(a[i * rs + p * ks]);
      acc_lo[i] = _mm512_fmadd_pd(ai, b_lo, acc_lo[i]);
      if constexpr (NV > 1) acc_hi[i] = _mm512_fmadd_pd(ai, b_hi, acc_hi[i]);
    }
  }
#pragma GCC unroll 16
  for (std::size_t i = 0; i < MR; ++i) {
    double* ci = c + i * ldc;
    if (accumulate) acc_lo[i] = _mm512_add_pd(acc_lo[i], _mm512_maskz_loadu_pd(mask_lo, ci));
    _mm512_mask_storeu_pd(ci, mask_lo, acc_lo[i]);
    if constexpr (NV > 1) {
      if (accumulate) acc_hi[i] = _mm512_add_pd(acc_hi[i], _mm512_maskz_loadu_pd(mask_hi, ci + 8));
      _mm512_mask_storeu_pd(ci + 8, mask_hi, acc_hi[i]);
    }
  }
}

template <std::size_t NV>
void gemm_column_panel(std::size_t m, std::size_t k, const double* a, std::size_t rs,
                       std::size_t ks, const double* b, std::size_t ldb, double* c,
                       std::size_t ldc, bool accumulate, __mmask8 lo, __mmask8 hi) {
  std::size_t i = 0;
  for (; i + kRows <= m; i += kRows)
    gemm_tile<kRows, NV>(k, a + i * rs, rs, ks, b, ldb, c + i * ldc, ldc, accumulate, lo, hi);
  if (m - i >= 8) {
    gemm_tile<8, NV>(k, a + i * rs, rs, ks, b, ldb, c + i * ldc, ldc, accumulate, lo, hi);
    i += 8;
  }
  const double* ar = a + i * rs;
  double* cr = c + i * ldc;
  switch (m - i) {
    case 7: gemm_tile<7, NV>(k, ar, rs, ks, b, ldb, cr, ldc, accumulate, lo, hi); break;
    case 6: gemm_tile<6, NV>(k, ar, rs, ks, b, ldb, cr, ldc, accumulate, lo, hi); break;
    case 5: gemm_tile<5, NV>(k, ar, rs, ks, b, ldb, cr, ldc, accumulate, lo, hi); break;
    case 4: gemm_tile<4, NV>(k, ar, rs, ks, b, ldb, cr, ldc, accumulate, lo, hi); break;
    case 3: gemm_tile<3, NV>(k, ar, rs, ks, b, ldb, cr, ldc, accumulate, lo, hi); break;
    case 2: gemm_tile<2, NV>(k, ar, rs, ks, b, ldb, cr, ldc, accumulate, lo, hi); break;
    case 1: gemm_tile<1, NV>(k, ar, rs, ks, b, ldb, cr, ldc, accumulate, lo, hi); break;
    default: break;
  }
}

__mmask8 lane_mask(std::size_t first_lane, std::size_t width) {
  if (width <= first_lane) return 0;
  const std::size_t lanes = width - first_lane >= 8 ? 8 : width - first_lane;
  return static_cast<__mmask8>((1u << lanes) - 1u);
}

void gemm_strided(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t rs,
                  std::size_t ks, const double* b, std::size_t ldb, double* c, std::size_t ldc,
                  bool accumulate) {
  if (m == 0 || n == 0) return;
  for (std::size_t j = 0; j < n; j += kCols) {
    const std::size_t width = n - j >= kCols ? kCols : n - j;
    const __mmask8 lo = lane_mask(0, width), hi = lane_mask(8, width);
    // Narrow panels skip the vector that would be fully masked.
    if (width <= 8)
      gemm_column_panel<1>(m, k, a, rs, ks, b + j, ldb, c + j, ldc, accumulate, lo, hi);
    else
      gemm_column_panel<kVecs>(m, k, a, rs, ks, b + j, ldb, c + j, ldc, accumulate, lo, hi);
  }
}

void gemm_avx512(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                 const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  gemm_strided(m, n, k, a, lda, 1, b, ldb, c, ldc, accumulate);
}

void gemm_tn_avx512(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                    const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  gemm_strided(m, n, k, a, 1, lda, b, ldb, c, ldc, accumulate);
}

inline __m512d polevl2(__m512d z, double p0, double p1, double p2) {
  return _mm512_fmadd_pd(_mm512_fmadd_pd(_mm512_set1_pd(p0), z, _mm512_set1_pd(p1)), z,
                         _mm512_set1_pd(p2));
}

// Numerator and denominator of exp(x) = (q + p) / (q - p) from the Cephes
// Pade form, with the 2^n scale applied to the numerator.
inline void exp_parts(__m512d x, __m512d& scaled, __m512d& den) {
  const __m512d n = _mm512_roundscale_pd(_mm512_mul_pd(_mm512_set1_pd(1.4426950408889634073599), x),
                                         _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m512d r = _mm512_fnmadd_pd(n, _mm512_set1_pd(6.93145751953125e-1), x);
  r = _mm512_fnmadd_pd(n, _mm512_set1_pd(1.42860682030941723212e-6), r);
  const __m512d rr = _mm512_mul_pd(r, r);
  const __m512d px = _mm512_mul_pd(
      r, polevl2(rr, 1.26177193074810590878e-4, 3.02994407707441961300e-2,
                 9.99999999999999999910e-1));
  const __m512d qx = _mm512_fmadd_pd(
      polevl2(rr, 3.00198505138664455042e-6, 2.52448340349684104192e-3,
              2.27265548208155028766e-1),
      rr, _mm512_set1_pd(2.00000000000000000009e0));
  scaled = _mm512_scalef_pd(_mm512_add_pd(qx, px), n);
  den = _mm512_sub_pd(qx, px);
}

// tanh from the Cephes forms: odd rational x + x^3 P(x^2)/Q(x^2) for
// |x| < 0.625, (e^2|x| - 1)/(e^2|x| + 1) beyond. Both branches are kept as
// fractions so only one division is issued per vector.
inline __m512d tanh_vec(__m512d x) {
  const __m512d ax = _mm512_abs_pd(x);
  const __m512d z = _mm512_mul_pd(x, x);
  const __m512d p = polevl2(z, -9.64399179425052238628e-1, -9.92877231001918586564e1,
                            -1.61468768441708447952e3);
  const __m512d q = _mm512_fmadd_pd(
      _mm512_fmadd_pd(_mm512_add_pd(z, _mm512_set1_pd(1.12811678491632931402e2)), z,
                      _mm512_set1_pd(2.23548839060100448583e3)),
      z, _mm512_set1_pd(4.84406305325125486048e3));
  const __m512d small_num = _mm512_fmadd_pd(ax, q, _mm512_mul_pd(_mm512_mul_pd(ax, z), p));

  const __m512d clipped = _mm512_min_pd(ax, _mm512_set1_pd(22.0));
  __m512d e_num, e_den;
  exp_parts(_mm512_add_pd(clipped, clipped), e_num, e_den);
  const __m512d large_num = _mm512_sub_pd(e_num, e_den);
  const __m512d large_den = _mm512_add_pd(e_num, e_den);

  const __mmask8 use_small = _mm512_cmp_pd_mask(ax, _mm512_set1_pd(0.625), _CMP_LT_OQ);
  const __m512d mag = _mm512_div_pd(_mm512_mask_blend_pd(use_small, large_num, small_num),
                                    _mm512_mask_blend_pd(use_small, large_den, q));
  const __m512i sign = _mm512_and_si512(_mm512_castpd_si512(x), _mm512_set1_epi64(INT64_MIN));
  return _mm512_castsi512_pd(_mm512_or_si512(_mm512_castpd_si512(mag), sign));
}

void tanh_avx512(std::size_t n, const double* x, double* y) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm512_storeu_pd(y + i, tanh_vec(_mm512_loadu_pd(x + i)));
  if (i < n) {
    const __mmask8 mask = static_cast<__mmask8>((1u << (n - i)) - 1u);
    _mm512_mask_storeu_pd(y + i, mask, tanh_vec(_mm512_maskz_loadu_pd(mask, x + i)));
  }
}

const KernelTable table{SimdLevel::avx512, "avx512", &gemm_avx512, &gemm_tn_avx512, &tanh_avx512};

}  // namespace

const KernelTable* detail::avx512_kernels() { return &table; }

}  // namespace wgeo::simd
