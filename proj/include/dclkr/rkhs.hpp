#pragma once

#include <memory>

#include "dclkr/kernel.hpp"
#include "dclkr/linalg.hpp"
#include "dclkr/types.hpp"

// Finite kernel expansions and the projection onto span{k_z : z in Z}.
//
// Scaling convention. The empirical risk on (X, y) uses the scaled norm
// |v|^2 = (1/n) sum v_i^2, so the sampling operator's adjoint is
// S^T v = (1/n) sum_i v_i k_{x_i}. A function h = sum_j c_j k_{x_j} is
// stored by its raw coefficient vector c, with every 1/n factor folded into
// c. Under this convention
//
//   * one gradient step on (1/2)|S h - y|^2 maps c -> c - (eta/n)(K c - y);
//   * the minimum-norm interpolant S^T (S S^T)^{-1} y has S S^T = K / n,
//     so S^T (K/n)^{-1} y = sum_j [(1/n) n K^{-1} y]_j k_{x_j}, i.e.
//     c = K^+ y independently of n.
//
// The orthogonal projection P_Z h onto W = span{k_z} is characterized by
// <P_Z h, k_z> = <h, k_z> = h(z) for all z in Z, so P_Z h is the
// minimum-norm interpolant of h's values on Z: coefficients K_ZZ^+ h(Z).

namespace dclkr {

/// A regressor sum_l coeffs_l k(., centers_l).
class RkhsFunction {
 public:
  RkhsFunction(KernelSpec kernel, PointSet centers, Vector coeffs);

  /// The zero function with no centers.
  static RkhsFunction zero(const KernelSpec& kernel);

  const KernelSpec& kernel() const { return kernel_; }
  const PointSet& centers() const { return centers_; }
  const Vector& coeffs() const { return coeffs_; }

  Vector evaluate(const PointSet& x) const;

 private:
  KernelSpec kernel_;
  PointSet centers_;
  Vector coeffs_;
};

Vector evaluate(const RkhsFunction& f, const PointSet& x);

/// The public input set Z with its Gram matrix and pseudo-inverse, reused by
/// every projection onto span{k_z}.
class SpanBasis {
 public:
  SpanBasis(KernelSpec kernel, PointSet z,
            PsdPseudoInverse::Method method = PsdPseudoInverse::Method::Auto);

  const KernelSpec& kernel() const { return kernel_; }
  const PointSet& points() const { return z_; }
  const Matrix& gram() const { return kzz_; }
  const PsdPseudoInverse& pinv() const { return pinv_; }
  Index size() const { return z_.rows(); }

  /// Coefficients of the minimum-norm interpolant of `values` on Z.
  Vector interpolate(const Vector& values) const;
  RkhsFunction interpolant(const Vector& values) const;

 private:
  KernelSpec kernel_;
  PointSet z_;
  Matrix kzz_;
  PsdPseudoInverse pinv_;
};

RkhsFunction min_norm_interpolant(const KernelSpec& kernel, const PointSet& z, const Vector& targets);

/// P_Z f. Throws ConfigError when f's kernel differs from the basis kernel.
RkhsFunction nystrom_project(const RkhsFunction& f, const SpanBasis& basis);
RkhsFunction nystrom_project(const RkhsFunction& f, const KernelSpec& kernel, const PointSet& z);

}  // namespace dclkr
