#include "dclkr/linalg.hpp"

#include <cmath>

#include "dclkr/error.hpp"

namespace dclkr {

namespace {

// Factorizations with a worse condition estimate fall through to the
// eigendecomposition, which applies the relative cutoff exactly.
constexpr double kCholeskyMinRcond = 1e-10;

}  // namespace

PsdPseudoInverse::PsdPseudoInverse(const Matrix& k, Method method) : n_(k.rows()) {
  if (k.rows() != k.cols()) throw ConfigError("pseudo-inverse needs a square matrix");
  if (n_ == 0) return;
  if (method == Method::Auto) {
    Eigen::LLT<Matrix> llt(k);
    if (llt.info() == Eigen::Success && llt.rcond() > kCholeskyMinRcond) {
      llt_ = std::move(llt);
      rank_ = n_;
      return;
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(k);
  if (es.info() != Eigen::Success) throw SolveError("eigendecomposition of Gram matrix failed");
  const Vector& vals = es.eigenvalues();
  const double top = vals.cwiseAbs().maxCoeff();
  const double cutoff = kRelativeCutoff * top;
  Index first = 0;
  while (first < n_ && !(vals(first) > cutoff)) ++first;
  rank_ = n_ - first;
  basis_ = es.eigenvectors().rightCols(rank_);
  inv_vals_ = vals.tail(rank_).cwiseInverse();
}

Vector PsdPseudoInverse::solve(const Vector& rhs) const {
  if (rhs.size() != n_) throw ConfigError("pseudo-inverse right-hand side has wrong length");
  if (n_ == 0) return Vector(0);
  if (llt_) return llt_->solve(rhs);
  if (rank_ == 0) return Vector::Zero(n_);
  const Vector proj = basis_.transpose() * rhs;
  return basis_ * inv_vals_.cwiseProduct(proj);
}

Matrix PsdPseudoInverse::solve(const Matrix& rhs) const {
  if (rhs.rows() != n_) throw ConfigError("pseudo-inverse right-hand side has wrong rows");
  if (n_ == 0) return Matrix(0, rhs.cols());
  if (llt_) return llt_->solve(rhs);
  if (rank_ == 0) return Matrix::Zero(n_, rhs.cols());
  const Matrix proj = inv_vals_.asDiagonal() * (basis_.transpose() * rhs);
  return basis_ * proj;
}

Vector spd_solve(const Matrix& a, const Vector& b) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) {
    Vector x = llt.solve(b);
    if (x.allFinite()) return x;
  }
  Vector x = PsdPseudoInverse(a, PsdPseudoInverse::Method::Eigen).solve(b);
  if (!x.allFinite()) throw SolveError("symmetric solve produced non-finite values");
  return x;
}

}  // namespace dclkr
