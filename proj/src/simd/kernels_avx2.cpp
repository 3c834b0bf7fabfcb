// AVX2 + FMA kernels. Built with -mavx2 -mfma; reached only through dispatch.

#include <immintrin.h>

#include "wgeo/simd/kernels.hpp"

namespace wgeo::simd {
namespace {

constexpr std::size_t kRows = 6;
constexpr std::size_t kCols = 8;

// One kRows x kCols tile (or a narrower masked tail) of C.
template <std::size_t MR, bool Masked>
inline void gemm_tile(std::size_t k, const double* a, std::size_t rs, std::size_t ks, const double* b,
                      std::size_t ldb, double* c, std::size_t ldc, bool accumulate, __m256i mask_lo,
                      __m256i mask_hi) {
  __m256d acc_lo[MR];
  __m256d acc_hi[MR];
  for (std::size_t i = 0; i < MR; ++i) {
    acc_lo[i] = _mm256_setzero_pd();
    acc_hi[i] = _mm256_setzero_pd();
  }
  for (std::size_t p = 0; p < k; ++p) {
    const double* bp = b + p * ldb;
    __m256d b_lo, b_hi;
    if constexpr (Masked) {
      b_lo = _mm256_maskload_pd(bp, mask_lo);
      b_hi = _mm256_maskload_pd(bp + 4, mask_hi);
    } else {
      b_lo = _mm256_loadu_pd(bp);
      b_hi = _mm256_loadu_pd(bp + 4);
    }
  for (std::size_t i = 0; i < MR; ++i) {
      const __m256d ai = _mm256_broadcast_sd(a + i * rs + p * ks);
      acc_lo[i] = _mm256_fmadd_pd(ai, b_lo, acc_lo[i]);
      acc_hi[i] = _mm256_fmadd_pd(ai, b_hi, acc_hi[i]);
    }
  }
  for (std::size_t i = 0; i < MR; ++i) {
    double* ci = c + i * ldc;
    if constexpr (Masked) {
      if (accumulate) {
        acc_lo[i] = _mm256_add_pd(acc_lo[i], _mm256_maskload_pd(ci, mask_lo));
        acc_hi[i] = _mm256_add_pd(acc_hi[i], _mm256_maskload_pd(ci + 4, mask_hi));
      }
      _mm256_maskstore_pd(ci, mask_lo, acc_lo[i]);
      _mm256_maskstore_pd(ci + 4, mask_hi, acc_hi[i]);
    } else {
      if (accumulate) {
        acc_lo[i] = _mm256_add_pd(acc_lo[i], _mm256_loadu_pd(ci));
        acc_hi[i] = _mm256_add_pd(acc_hi[i], _mm256_loadu_pd(ci + 4));
      }
      _mm256_storeu_pd(ci, acc_lo[i]);
      _mm256_storeu_pd(ci + 4, acc_hi[i]);
    }
  }
}

template <bool Masked>
void gemm_column_panel(std::size_t m, std::size_t k, const double* a, std::size_t rs, std::size_t ks,
                       const double* b, std::size_t ldb, double* c, std::size_t ldc,
                       bool accumulate, __m256i mask_lo, __m256i mask_hi) {
  std::size_t i = 0;
  for (; i + kRows <= m; i += kRows)
    gemm_tile<kRows, Masked>(k, a + i * rs, rs, ks, b, ldb, c + i * ldc, ldc, accumulate, mask_lo,
                             mask_hi);
  const double* ar = a + i * rs;
  double* cr = c + i * ldc;
  switch (m - i) {
    case 5:
      gemm_tile<5, Masked>(k, ar, rs, ks, b, ldb, cr, ldc, accumulate, mask_lo, mask_hi);
      break;
    case 4:
      gemm_tile<4, Masked>(k, ar, rs, ks, b, ldb, cr, ldc, accumulate, mask_lo, mask_hi);
      break;
    case 3:
      gemm_tile<3, Masked>(k, ar, rs, ks, b, ldb, cr, ldc, accumulate, mask_lo, mask_hi);
      break;
    case 2:
      gemm_tile<2, Masked>(k, ar, rs, ks, b, ldb, cr, ldc, accumulate, mask_lo, mask_hi);
      break;
    case 1:
      gemm_tile<1, Masked>(k, ar, rs, ks, b, ldb, cr, ldc, accumulate, mask_lo, mask_hi);
      break;
    default:
      break;
  }
}

__m256i lane_mask(std::size_t first_lane, std::size_t width) {
  alignas(32) long long lanes[4];
  for (std::size_t l = 0; l < 4; ++l) lanes[l] = (first_lane + l < width) ? -1 : 0;
  return _mm256_load_si256(reinterpret_cast<const __m256i*>(lanes));
}

// Element (i, p) of A lives at a[i * rs + p * ks].
void gemm_strided(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t rs, std::size_t ks,
               const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  if (m == 0 || n == 0) return;
  const __m256i all = _mm256_set1_epi64x(-1);
  std::size_t j = 0;
  for (; j + kCols <= n; j += kCols)
    gemm_column_panel<false>(m, k, a, rs, ks, b + j, ldb, c + j, ldc, accumulate, all, all);
  if (j < n) {
    const std::size_t width = n - j;
    gemm_column_panel<true>(m, k, a, rs, ks, b + j, ldb, c + j, ldc, accumulate,
                            lane_mask(0, width), lane_mask(4, width));
  }
}

void gemm_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
               const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  gemm_strided(m, n, k, a, lda, 1, b, ldb, c, ldc, accumulate);
}

void gemm_tn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                  const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate) {
  gemm_strided(m, n, k, a, 1, lda, b, ldb, c, ldc, accumulate);
}

inline __m256d polevl2(__m256d z, double p0, double p1, double p2) {
  return _mm256_fmadd_pd(_mm256_fmadd_pd(_mm256_set1_pd(p0), z, _mm256_set1_pd(p1)), z,
                         _mm256_set1_pd(p2));
}

// Numerator and denominator of exp(x) = (q + p) / (q - p) from the Cephes
// Pade form, with the 2^n scale applied to the numerator.
inline void exp_parts(__m256d x, __m256d& scaled, __m256d& den) {
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(_mm256_set1_pd(1.4426950408889634073599), x),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125e-1), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212e-6), r);
  const __m256d rr = _mm256_mul_pd(r, r);
  const __m256d px = _mm256_mul_pd(
      r, polevl2(rr, 1.26177193074810590878e-4, 3.02994407707441961300e-2,
                 9.99999999999999999910e-1));
  const __m256d qx = _mm256_fmadd_pd(
      polevl2(rr, 3.00198505138664455042e-6, 2.52448340349684104192e-3,
              2.27265548208155028766e-1),
      rr, _mm256_set1_pd(2.00000000000000000009e0));
  // 2^n for 0 <= n < 2^52 via the exponent field.
  const __m256d magic = _mm256_set1_pd(4503599627370496.0);
  __m256i ni = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, magic)),
                                _mm256_castpd_si256(magic));
  ni = _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
  scaled = _mm256_mul_pd(_mm256_add_pd(qx, px), _mm256_castsi256_pd(ni));
  den = _mm256_sub_pd(qx, px);
}

// tanh from the Cephes forms: odd rational x + x^3 P(x^2)/Q(x^2) for
// |x| < 0.625, (e^2|x| - 1)/(e^2|x| + 1) beyond. Both branches are kept as
// fractions so only one division is issued per vector.
inline __m256d tanh_vec(__m256d x) {
  const __m256d sign_bit = _mm256_set1_pd(-0.0);
  const __m256d ax = _mm256_andnot_pd(sign_bit, x);
  const __m256d z = _mm256_mul_pd(x, x);
  const __m256d p = polevl2(z, -9.64399179425052238628e-1, -9.92877231001918586564e1,
                            -1.61468768441708447952e3);
  const __m256d q = _mm256_fmadd_pd(
      _mm256_fmadd_pd(_mm256_add_pd(z, _mm256_set1_pd(1.12811678491632931402e2)), z,
                      _mm256_set1_pd(2.23548839060100448583e3)),
      z, _mm256_set1_pd(4.84406305325125486048e3));
  const __m256d small_num = _mm256_fmadd_pd(ax, q, _mm256_mul_pd(_mm256_mul_pd(ax, z), p));

  const __m256d clipped = _mm256_min_pd(ax, _mm256_set1_pd(22.0));
  __m256d e_num, e_den;
  exp_parts(_mm256_add_pd(clipped, clipped), e_num, e_den);
  const __m256d large_num = _mm256_sub_pd(e_num, e_den);
  const __m256d large_den = _mm256_add_pd(e_num, e_den);

  const __m256d use_small = _mm256_cmp_pd(ax, _mm256_set1_pd(0.625), _CMP_LT_OQ);
  const __m256d mag = _mm256_div_pd(_mm256_blendv_pd(large_num, small_num, use_small),
                                    _mm256_blendv_pd(large_den, q, use_small));
  return _mm256_or_pd(mag, _mm256_and_pd(x, sign_bit));
}

void tanh_avx2(std::size_t n, const double* x, double* y) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, tanh_vec(_mm256_loadu_pd(x + i)));
  if (i < n) {
    alignas(32) double buf[4] = {0.0, 0.0, 0.0, 0.0};
    for (std::size_t l = 0; i + l < n; ++l) buf[l] = x[i + l];
    _mm256_store_pd(buf, tanh_vec(_mm256_load_pd(buf)));
    for (std::size_t l = 0; i + l < n; ++l) y[i + l] = buf[l];
  }
}

const KernelTable table{SimdLevel::avx2, "avx2", &gemm_avx2, &gemm_tn_avx2, &tanh_avx2};

}  // namespace

const KernelTable* detail::avx2_kernels() { return &table; }

}  // namespace wgeo::simd
