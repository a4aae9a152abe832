#include "dclkr/kernel.hpp"

#include <cmath>
#include <string>

#include "dclkr/error.hpp"

namespace dclkr {

KernelSpec KernelSpec::min_kernel() { return {KernelKind::Min, 1, 0.0}; }

KernelSpec KernelSpec::wendland0(int dim) {
  if (dim < 1 || dim > 3) {
    // (1-r)_+^2 is only positive definite up to three dimensions.
    throw ConfigError("wendland0 kernel requires 1 <= dim <= 3, got " + std::to_string(dim));
  }
  return {KernelKind::Wendland0, dim, 0.0};
}

KernelSpec KernelSpec::wendland2(int dim) {
  if (dim < 1 || dim > 3) {
    throw ConfigError("wendland2 kernel requires 1 <= dim <= 3, got " + std::to_string(dim));
  }
  return {KernelKind::Wendland2, dim, 0.0};
}

KernelSpec KernelSpec::gaussian(double bandwidth, int dim) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw ConfigError("gaussian kernel bandwidth must be positive and finite");
  }
  if (dim < 1) throw ConfigError("gaussian kernel dimension must be positive");
  return {KernelKind::Gaussian, dim, bandwidth};
}

KernelSpec KernelSpec::parse(std::string_view name, int dim, double bandwidth) {
  if (name == "min") {
    if (dim != 1) throw ConfigError("min kernel is one-dimensional");
    return min_kernel();
  }
  if (name == "wendland0") return wendland0(dim);
  if (name == "wendland2") return wendland2(dim);
  if (name == "gaussian") return gaussian(bandwidth, dim);
  throw ConfigError("unknown kernel '" + std::string(name) + "'");
}

double KernelSpec::kappa() const {
  switch (kind_) {
    case KernelKind::Min:
    case KernelKind::Wendland0:
    case KernelKind::Gaussian:
      return 1.0;
    case KernelKind::Wendland2:
      return std::sqrt(3.0);
  }
  return 1.0;
}

std::string KernelSpec::name() const {
  switch (kind_) {
    case KernelKind::Min: return "min";
    case KernelKind::Wendland0: return "wendland0";
    case KernelKind::Wendland2: return "wendland2";
    case KernelKind::Gaussian: return "gaussian";
  }
  return "unknown";
}

double KernelSpec::operator()(std::span<const double> x, std::span<const double> y) const {
  if (x.size() != static_cast<std::size_t>(dim_) || y.size() != static_cast<std::size_t>(dim_)) {
    throw ConfigError("point dimension does not match kernel '" + name() + "'");
  }
  if (kind_ == KernelKind::Min) return x[0] < y[0] ? x[0] : y[0];
  double r2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - y[k];
    r2 += diff * diff;
  }
  switch (kind_) {
    case KernelKind::Wendland0: return detail::wendland0_profile(std::sqrt(r2));
    case KernelKind::Wendland2: return detail::wendland2_profile(std::sqrt(r2), r2);
    case KernelKind::Gaussian: return std::exp(r2 * (-0.5 / (bandwidth_ * bandwidth_)));
    case KernelKind::Min: break;
  }
  return 0.0;
}

void KernelSpec::check_points(const PointSet& points, std::string_view what) const {
  if (points.cols() != dim_) {
    throw ConfigError(std::string(what) + " has dimension " + std::to_string(points.cols()) +
                      " but kernel '" + name() + "' expects " + std::to_string(dim_));
  }
}

}  // namespace dclkr
