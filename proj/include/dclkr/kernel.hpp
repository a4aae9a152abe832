#pragma once

#include <span>
#include <string>
#include <string_view>

#include "dclkr/types.hpp"

namespace dclkr {

enum class KernelKind {
  Min,        ///< k(x,y) = min(x,y) on [0,1]
  Wendland0,  ///< (1-r)_+^2, r = |x-y|
  Wendland2,  ///< (1-r)_+^6 (35 r^2 + 18 r + 3)
  Gaussian,   ///< exp(-r^2 / (2 h^2))
};

/// A positive-definite kernel together with its input dimension and
/// sup-bound kappa = sup_x sqrt(k(x,x)).
class KernelSpec {
 public:
  static KernelSpec min_kernel();
  static KernelSpec wendland0(int dim = 3);
  static KernelSpec wendland2(int dim = 3);
  static KernelSpec gaussian(double bandwidth, int dim);

  /// Accepts "min", "wendland0", "wendland2", "gaussian".
  static KernelSpec parse(std::string_view name, int dim, double bandwidth = 0.2);

  KernelKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double bandwidth() const { return bandwidth_; }
  double kappa() const;
  std::string name() const;

  double operator()(std::span<const double> x, std::span<const double> y) const;

  /// Throws ConfigError unless `points` has exactly dim() columns.
  void check_points(const PointSet& points, std::string_view what) const;

  bool operator==(const KernelSpec&) const = default;

 private:
  KernelSpec(KernelKind kind, int dim, double bandwidth)
      : kind_(kind), dim_(dim), bandwidth_(bandwidth) {}

  KernelKind kind_;
  int dim_;
  double bandwidth_;
};

namespace detail {

// Radial profiles shared by the scalar and vector Gram paths. The operation
// order here is the reference the SIMD kernels reproduce bit for bit.
inline double wendland0_profile(double r) {
  double t = 1.0 - r;
  t = t > 0.0 ? t : 0.0;
  return t * t;
}

inline double wendland2_profile(double r, double r2) {
  double t = 1.0 - r;
  t = t > 0.0 ? t : 0.0;
  const double t2 = t * t;
  const double t4 = t2 * t2;
  const double t6 = t4 * t2;
  const double poly = (35.0 * r2 + 18.0 * r) + 3.0;
  return t6 * poly;
}

}  // namespace detail

}  // namespace dclkr
