// Reference Gram kernels. Every vector path must reproduce these results
// bit for bit, so keep the operation order in sync with gram_avx2.cpp.
#include <cmath>

#include "dclkr/gram.hpp"

namespace dclkr::simd {

void gram_block_scalar(const GramBlock& blk) {
  for (Index j = 0; j < blk.q; ++j) {
    double* col = blk.out + j * blk.ldo;
    if (blk.kind == KernelKind::Min) {
      const double bj = blk.b[j];
      for (Index i = 0; i < blk.p; ++i) col[i] = blk.a[i] < bj ? blk.a[i] : bj;
      continue;
    }
    for (Index i = 0; i < blk.p; ++i) {
      double r2 = 0.0;
      for (Index k = 0; k < blk.d; ++k) {
        const double diff = blk.a[i + k * blk.lda] - blk.b[j + k * blk.ldb];
        r2 += diff * diff;
      }
      switch (blk.kind) {
        case KernelKind::Wendland0: col[i] = detail::wendland0_profile(std::sqrt(r2)); break;
        case KernelKind::Wendland2: col[i] = detail::wendland2_profile(std::sqrt(r2), r2); break;
        case KernelKind::Gaussian: col[i] = std::exp(r2 * blk.neg_inv_two_h2); break;
        case KernelKind::Min: break;
      }
    }
  }
}

}  // namespace dclkr::simd
