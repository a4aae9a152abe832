#include "dclkr/gram.hpp"

namespace dclkr {

namespace {

simd::GramBlock make_block(const KernelSpec& kernel, const PointSet& a, const PointSet& b, Matrix& out) {
  const double h = kernel.bandwidth();
  return simd::GramBlock{
      .kind = kernel.kind(),
      .neg_inv_two_h2 = kernel.kind() == KernelKind::Gaussian ? -0.5 / (h * h) : 0.0,
      .a = a.data(),
      .p = a.rows(),
      .lda = a.rows(),
      .b = b.data(),
      .q = b.rows(),
      .ldb = b.rows(),
      .d = a.cols(),
      .out = out.data(),
      .ldo = out.rows(),
  };
}

}  // namespace

Matrix gram(const KernelSpec& kernel, const PointSet& a, const PointSet& b) {
  kernel.check_points(a, "left point set");
  kernel.check_points(b, "right point set");
  Matrix out(a.rows(), b.rows());
  if (out.size() == 0) return out;
  const auto blk = make_block(kernel, a, b, out);
  if (simd::active_isa() == simd::Isa::Avx2) {
    simd::gram_block_avx2(blk);
  } else {
    simd::gram_block_scalar(blk);
  }
  return out;
}

Matrix gram(const KernelSpec& kernel, const PointSet& a) {
  Matrix k = gram(kernel, a, a);
  // Entry-wise evaluation is already symmetric for these radial and min
  // kernels; mirror anyway so consumers can rely on exact symmetry.
  for (Index j = 0; j < k.cols(); ++j) {
    for (Index i = j + 1; i < k.rows(); ++i) k(j, i) = k(i, j);
  }
  return k;
}

}  // namespace dclkr
