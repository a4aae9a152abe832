#include "dclkr/rkhs.hpp"

#include <string>

#include "dclkr/error.hpp"
#include "dclkr/gram.hpp"

namespace dclkr {

RkhsFunction::RkhsFunction(KernelSpec kernel, PointSet centers, Vector coeffs)
    : kernel_(kernel), centers_(std::move(centers)), coeffs_(std::move(coeffs)) {
  if (centers_.rows() != coeffs_.size()) {
    throw ConfigError("RKHS function has " + std::to_string(centers_.rows()) + " centers but " +
                      std::to_string(coeffs_.size()) + " coefficients");
  }
  if (centers_.rows() > 0) kernel_.check_points(centers_, "centers");
}

RkhsFunction RkhsFunction::zero(const KernelSpec& kernel) {
  return {kernel, PointSet(0, kernel.dim()), Vector(0)};
}

Vector RkhsFunction::evaluate(const PointSet& x) const {
  kernel_.check_points(x, "evaluation points");
  if (centers_.rows() == 0) return Vector::Zero(x.rows());
  return gram(kernel_, x, centers_) * coeffs_;
}

Vector evaluate(const RkhsFunction& f, const PointSet& x) { return f.evaluate(x); }

SpanBasis::SpanBasis(KernelSpec kernel, PointSet z, PsdPseudoInverse::Method method)
    : kernel_(kernel), z_(std::move(z)), kzz_(dclkr::gram(kernel_, z_)), pinv_(kzz_, method) {}

Vector SpanBasis::interpolate(const Vector& values) const {
  if (values.size() != z_.rows()) throw ConfigError("interpolation targets must have one value per public input");
  return pinv_.solve(values);
}

RkhsFunction SpanBasis::interpolant(const Vector& values) const {
  return {kernel_, z_, interpolate(values)};
}

RkhsFunction min_norm_interpolant(const KernelSpec& kernel, const PointSet& z, const Vector& targets) {
  if (z.rows() < 1) throw ConfigError("minimum-norm interpolation needs at least one point");
  return SpanBasis(kernel, z).interpolant(targets);
}

RkhsFunction nystrom_project(const RkhsFunction& f, const SpanBasis& basis) {
  if (!(f.kernel() == basis.kernel())) {
    throw ConfigError("cannot project a '" + f.kernel().name() + "' function onto a '" +
                      basis.kernel().name() + "' span");
  }
  return basis.interpolant(f.evaluate(basis.points()));
}

RkhsFunction nystrom_project(const RkhsFunction& f, const KernelSpec& kernel, const PointSet& z) {
  if (!(f.kernel() == kernel)) {
    throw ConfigError("cannot project a '" + f.kernel().name() + "' function onto a '" + kernel.name() + "' span");
  }
  return nystrom_project(f, SpanBasis(kernel, z));
}

}  // namespace dclkr
