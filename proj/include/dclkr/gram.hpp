#pragma once

#include "dclkr/kernel.hpp"
#include "dclkr/types.hpp"

namespace dclkr {

/// Pairwise kernel matrix: entry (i, j) = k(a_i, b_j).
Matrix gram(const KernelSpec& kernel, const PointSet& a, const PointSet& b);

/// Symmetric Gram of a point set with itself.
Matrix gram(const KernelSpec& kernel, const PointSet& a);

namespace simd {

enum class Isa { Scalar, Avx2 };

/// Raw column-major Gram block description. `a` is p x d with leading
/// dimension lda, `b` is q x d with leading dimension ldb, `out` is p x q
/// with leading dimension ldo.
struct GramBlock {
  KernelKind kind;
  double neg_inv_two_h2;  // Gaussian only
  const double* a;
  Index p;
  Index lda;
  const double* b;
  Index q;
  Index ldb;
  Index d;
  double* out;
  Index ldo;
};

void gram_block_scalar(const GramBlock& blk);
void gram_block_avx2(const GramBlock& blk);

/// Best instruction set the running CPU (and this build) supports.
Isa detected_isa();
/// Instruction set used by gram(). Defaults to detected_isa(); the
/// DCLKR_SIMD=scalar environment variable forces the reference path.
Isa active_isa();
/// Overrides the active path; requesting Avx2 on a machine without it is a
/// ConfigError.
void set_active_isa(Isa isa);
const char* isa_name(Isa isa);

}  // namespace simd

}  // namespace dclkr
