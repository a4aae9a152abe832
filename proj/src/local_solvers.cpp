#include "dclkr/local_solvers.hpp"

#include <cmath>
#include <string>

#include "dclkr/error.hpp"
#include "dclkr/gram.hpp"
#include "dclkr/linalg.hpp"

namespace dclkr {

void check_learning_rate(double eta, const KernelSpec& kernel) {
  const double kappa = kernel.kappa();
  if (!(eta > 0.0) || !(eta < 1.0 / (kappa * kappa))) {
    throw ConfigError("learning rate " + std::to_string(eta) + " outside (0, 1/kappa^2) = (0, " +
                      std::to_string(1.0 / (kappa * kappa)) + ")");
  }
}

namespace {

void check_party(const KernelSpec& kernel, const PartyDataset& party) {
  if (party.empty()) throw ConfigError("party dataset is empty");
  if (party.y.size() != party.x.rows()) throw ConfigError("party inputs and labels differ in length");
  kernel.check_points(party.x, "party inputs");
}

}  // namespace

PartyWorkspace::PartyWorkspace(const KernelSpec& kernel, const PartyDataset& party, const PointSet& z)
    : y_(party.y) {
  check_party(kernel, party);
  kxz_ = z.rows() > 0 ? gram(kernel, party.x, z) : Matrix(party.size(), 0);
  kxx_ = gram(kernel, party.x);
}

LocalUpdate PartyWorkspace::run(const Vector& c, const Vector& kzz_c, double eta, int steps) const {
  if (steps < 0) throw ConfigError("number of local iterations must be nonnegative");
  if (c.size() != kxz_.cols() || kzz_c.size() != kxz_.cols()) {
    throw ConfigError("span-Z coefficient vector has wrong length");
  }
  const double step = eta / static_cast<double>(y_.size());
  const Vector kxz_c = kxz_ * c;
  Vector a = Vector::Zero(y_.size());
  Vector resid(y_.size());
  for (int s = 0; s < steps; ++s) {
    resid.noalias() = kxx_ * a;
    resid += kxz_c - y_;
    a -= step * resid;
  }
  Vector preds = kzz_c;
  preds.noalias() += kxz_.transpose() * a;
  return {std::move(preds), std::move(a)};
}

LocalUpdate local_gd_update(const Vector& c, const PointSet& z, const PartyDataset& party,
                            const KernelSpec& kernel, double eta, int steps) {
  check_learning_rate(eta, kernel);
  if (z.rows() > 0) kernel.check_points(z, "public inputs");
  const PartyWorkspace ws(kernel, party, z);
  const Vector kzz_c = z.rows() > 0 ? Vector(gram(kernel, z) * c) : Vector(0);
  return ws.run(c, kzz_c, eta, steps);
}

RkhsFunction kernel_gd(const KernelSpec& kernel, const PartyDataset& data, double eta, int iterations,
                       const GdObserver& observer) {
  check_learning_rate(eta, kernel);
  check_party(kernel, data);
  if (iterations < 0) throw ConfigError("iteration count must be nonnegative");
  const Matrix k = gram(kernel, data.x);
  const double step = eta / static_cast<double>(data.size());
  Vector b = Vector::Zero(data.size());
  Vector resid(data.size());
  for (int t = 0; t < iterations; ++t) {
    resid.noalias() = k.selfadjointView<Eigen::Lower>() * b;
    resid -= data.y;
    b -= step * resid;
    if (observer) observer(t + 1, b);
  }
  return {kernel, data.x, std::move(b)};
}

RkhsFunction krr_closed_form(const KernelSpec& kernel, const PartyDataset& data, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("ridge parameter must be positive");
  check_party(kernel, data);
  Matrix k = gram(kernel, data.x);
  k.diagonal().array() += static_cast<double>(data.size()) * lambda;
  Vector coeffs = spd_solve(k, data.y);
  return {kernel, data.x, std::move(coeffs)};
}

// With G = K_ZZ and A = K_XZ the normal equations read
// (A^T A + n lambda G) c = A^T y. Every null vector of G is a null vector
// of A (G v = 0 means sum v_j k_{z_j} = 0), so the minimum-norm solution
// lies in range(G) and equals c = G^+ A^T (A G^+ A^T + n lambda I)^{-1} y,
// which only needs an n x n solve against the shared factorization of G.
RkhsFunction nystrom_krr(const SpanBasis& basis, const PartyDataset& data, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("ridge parameter must be positive");
  check_party(basis.kernel(), data);
  const Matrix a = gram(basis.kernel(), data.x, basis.points());
  const Matrix ginv_at = basis.pinv().solve(Matrix(a.transpose()));
  Matrix inner = a * ginv_at;
  inner = 0.5 * (inner + inner.transpose()).eval();
  inner.diagonal().array() += static_cast<double>(data.size()) * lambda;
  const Vector beta = spd_solve(inner, data.y);
  return {basis.kernel(), basis.points(), ginv_at * beta};
}

RkhsFunction nystrom_krr(const KernelSpec& kernel, const PartyDataset& data, const PointSet& z, double lambda) {
  return nystrom_krr(SpanBasis(kernel, z), data, lambda);
}

}  // namespace dclkr
