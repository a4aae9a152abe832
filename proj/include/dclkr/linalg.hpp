#pragma once

#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "dclkr/types.hpp"

namespace dclkr {

/// Pseudo-inverse of a symmetric positive semidefinite matrix.
///
/// The pseudo-inverse is V diag(1/lambda) V^T over eigenvalues
/// lambda >= kRelativeCutoff * lambda_max; the rest are treated as zero.
/// When a Cholesky factorization succeeds with a reciprocal condition
/// estimate far above the cutoff, no eigenvalue would be dropped and the
/// factorization is used instead (same operator, O(n^3/3) instead of a full
/// eigendecomposition).
class PsdPseudoInverse {
 public:
  static constexpr double kRelativeCutoff = 1e-12;

  enum class Method { Auto, Eigen };

  PsdPseudoInverse() = default;
  explicit PsdPseudoInverse(const Matrix& k, Method method = Method::Auto);

  Vector solve(const Vector& rhs) const;
  Matrix solve(const Matrix& rhs) const;

  Index size() const { return n_; }
  Index rank() const { return rank_; }
  bool full_rank() const { return rank_ == n_; }
  bool used_cholesky() const { return llt_.has_value(); }

 private:
  Index n_ = 0;
  Index rank_ = 0;
  std::optional<Eigen::LLT<Matrix>> llt_;
  Matrix basis_;     // eigenvectors kept (n x rank)
  Vector inv_vals_;  // 1 / kept eigenvalues
};

/// Solve (A) x = b for symmetric A: Cholesky when A is positive definite,
/// pseudo-inverse otherwise.
Vector spd_solve(const Matrix& a, const Vector& b);

}  // namespace dclkr
