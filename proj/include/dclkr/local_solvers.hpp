#pragma once

#include <functional>

#include "dclkr/kernel.hpp"
#include "dclkr/rkhs.hpp"
#include "dclkr/types.hpp"

namespace dclkr {

/// Throws ConfigError unless 0 < eta < 1/kappa^2.
void check_learning_rate(double eta, const KernelSpec& kernel);

/// Result of E local gradient steps started from a span-Z model.
struct LocalUpdate {
  Vector preds_z;       ///< local model evaluated on Z
  Vector local_coeffs;  ///< coefficients on the party's own inputs
};

/// One party's Gram blocks against the public inputs and itself. Built once
/// per run and reused every round.
class PartyWorkspace {
 public:
  PartyWorkspace(const KernelSpec& kernel, const PartyDataset& party, const PointSet& z);

  /// E steps of a <- a - (eta/n_i)(K_XZ c + K_XX a - y) from a = 0.
  /// `kzz_c` must equal K_ZZ c (shared by all parties in a round).
  LocalUpdate run(const Vector& c, const Vector& kzz_c, double eta, int steps) const;

  Index size() const { return y_.size(); }
  const Matrix& kxz() const { return kxz_; }
  const Matrix& kxx() const { return kxx_; }
  const Vector& labels() const { return y_; }

 private:
  Matrix kxz_;
  Matrix kxx_;
  Vector y_;
};

/// Local kernel GD for one party starting from f = sum_j c_j k_{z_j}.
LocalUpdate local_gd_update(const Vector& c, const PointSet& z, const PartyDataset& party,
                            const KernelSpec& kernel, double eta, int steps);

using GdObserver = std::function<void(int step, const Vector& coeffs)>;

/// Unregularized kernel gradient descent, b <- b - (eta/n)(K b - y) from
/// b = 0. The observer (if any) sees b after every step.
RkhsFunction kernel_gd(const KernelSpec& kernel, const PartyDataset& data, double eta, int iterations,
                       const GdObserver& observer = {});

/// Kernel ridge regression: coeffs = (K + n lambda I)^{-1} y.
RkhsFunction krr_closed_form(const KernelSpec& kernel, const PartyDataset& data, double lambda);

/// Nystrom ridge with centers Z:
/// argmin_c |K_XZ c - y|^2 + n lambda c^T K_ZZ c.
RkhsFunction nystrom_krr(const KernelSpec& kernel, const PartyDataset& data, const PointSet& z, double lambda);
RkhsFunction nystrom_krr(const SpanBasis& basis, const PartyDataset& data, double lambda);

}  // namespace dclkr
