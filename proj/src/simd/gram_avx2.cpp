// AVX2 Gram kernels: four rows of `a` per lane group, one column of the
// output at a time. Built with -mavx2 only (no FMA) so that every product
// and sum rounds exactly like gram_block_scalar.
#include <immintrin.h>

#include <cmath>

#include "dclkr/gram.hpp"

namespace dclkr::simd {

namespace {

inline void tail_scalar(const GramBlock& blk, Index j, Index i0) {
  GramBlock rest = blk;
  rest.a = blk.a + i0;
  rest.p = blk.p - i0;
  rest.b = blk.b + j;
  rest.q = 1;
  rest.out = blk.out + j * blk.ldo + i0;
  gram_block_scalar(rest);
}

}  // namespace

void gram_block_avx2(const GramBlock& blk) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d c35 = _mm256_set1_pd(35.0);
  const __m256d c18 = _mm256_set1_pd(18.0);
  const __m256d c3 = _mm256_set1_pd(3.0);
  const Index vec_end = blk.p - blk.p % 4;

  for (Index j = 0; j < blk.q; ++j) {
    double* col = blk.out + j * blk.ldo;

    if (blk.kind == KernelKind::Min) {
      const __m256d bj = _mm256_set1_pd(blk.b[j]);
      for (Index i = 0; i < vec_end; i += 4) {
        // min(a, b) with the scalar tie-break a < b ? a : b
        const __m256d ai = _mm256_loadu_pd(blk.a + i);
        const __m256d lt = _mm256_cmp_pd(ai, bj, _CMP_LT_OQ);
        _mm256_storeu_pd(col + i, _mm256_blendv_pd(bj, ai, lt));
      }
      if (vec_end < blk.p) tail_scalar(blk, j, vec_end);
      continue;
    }

    for (Index i = 0; i < vec_end; i += 4) {
      __m256d r2 = zero;
      for (Index k = 0; k < blk.d; ++k) {
        const __m256d ak = _mm256_loadu_pd(blk.a + i + k * blk.lda);
        const __m256d bk = _mm256_set1_pd(blk.b[j + k * blk.ldb]);
        const __m256d diff = _mm256_sub_pd(ak, bk);
        r2 = _mm256_add_pd(r2, _mm256_mul_pd(diff, diff));
      }
      switch (blk.kind) {
        case KernelKind::Wendland0: {
          const __m256d r = _mm256_sqrt_pd(r2);
          const __m256d t = _mm256_max_pd(_mm256_sub_pd(one, r), zero);
          _mm256_storeu_pd(col + i, _mm256_mul_pd(t, t));
          break;
        }
        case KernelKind::Wendland2: {
          const __m256d r = _mm256_sqrt_pd(r2);
          const __m256d t = _mm256_max_pd(_mm256_sub_pd(one, r), zero);
          const __m256d t2 = _mm256_mul_pd(t, t);
          const __m256d t4 = _mm256_mul_pd(t2, t2);
          const __m256d t6 = _mm256_mul_pd(t4, t2);
          const __m256d poly =
              _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(c35, r2), _mm256_mul_pd(c18, r)), c3);
          _mm256_storeu_pd(col + i, _mm256_mul_pd(t6, poly));
          break;
        }
        case KernelKind::Gaussian: {
          alignas(32) double arg[4];
          _mm256_store_pd(arg, _mm256_mul_pd(r2, _mm256_set1_pd(blk.neg_inv_two_h2)));
          for (int l = 0; l < 4; ++l) col[i + l] = std::exp(arg[l]);
          break;
        }
        case KernelKind::Min: break;
      }
    }
    if (vec_end < blk.p) tail_scalar(blk, j, vec_end);
  }
}

}  // namespace dclkr::simd
