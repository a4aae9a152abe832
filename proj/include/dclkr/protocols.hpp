#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Cholesky>

#include "dclkr/kernel.hpp"
#include "dclkr/rkhs.hpp"
#include "dclkr/types.hpp"

namespace dclkr {

/// Protocol parameters for distillation-based collaborative kernel regression.
struct FederationConfig {
  int rounds = 1;       ///< T, communication rounds
  int local_steps = 1;  ///< E, local GD steps per round
  double eta = 0.5;
  std::vector<double> weights;  ///< n_i / n, in party order
  PointSet public_inputs;       ///< Z
  KernelSpec kernel = KernelSpec::min_kernel();
  std::uint64_t seed = 0;

  /// Throws ConfigError unless weights are positive and sum to 1 (+-1e-12),
  /// E >= 1, T >= 1 and eta in (0, 1/kappa^2).
  void validate() const;
};

/// n_i / n for each party.
std::vector<double> weights_from_sizes(std::span<const PartyDataset> parties);

struct RoundTrace {
  std::vector<Vector> consensus;     ///< y_{p,t} on Z, one per round
  std::vector<double> holdout_rmse;  ///< shared-model RMSE after each round (empty without a holdout set)
};

struct DclKrOptions {
  const PartyDataset* holdout = nullptr;
  /// Threads used for the per-party local updates. Aggregation always
  /// reduces in ascending party index, so results do not depend on this.
  unsigned workers = 1;
  /// Prebuilt basis for cfg.public_inputs; built internally when null.
  const SpanBasis* basis = nullptr;
};

struct DclKrResult {
  RkhsFunction model;  ///< shared span-Z model after the last round
  RoundTrace trace;
};

/// Rounds of: E local GD steps per party from the shared model, weighted
/// consensus of the local predictions on Z, and projection of the consensus
/// onto span{k_z} (the limit of GD on (Z, consensus) from any span-Z start).
DclKrResult dcl_kr(std::span<const PartyDataset> parties, const FederationConfig& cfg, const DclKrOptions& opts = {});

/// Dense evaluation of
///   f_t = P_Z sum_i w_i (Tbar_i^E f_{t-1} + eta sum_{s<E} Tbar_i^s S_i^T y_i),
///   Tbar_i = I - eta T_{k,X_i},
/// with explicit operator matrices over X u Z. Returns f_T on Z.
/// Refuses instances with n + n0 > kOracleMaxPoints.
Vector dcl_kr_recurrence_oracle(std::span<const PartyDataset> parties, const FederationConfig& cfg);
inline constexpr Index kOracleMaxPoints = 2000;

/// Divide and conquer: data-size-weighted average of per-party Nystrom ridge
/// coefficients over the common centers Z.
RkhsFunction dc_ny(std::span<const PartyDataset> parties, const PointSet& z, const KernelSpec& kernel, double lambda);
RkhsFunction dc_ny(std::span<const PartyDataset> parties, const SpanBasis& basis, double lambda);

/// State of the DKRR-NY-CM iteration below. Each party's
/// (M_j + lambda I)^{-1} is applied through an n_j x n_j Woodbury solve.
class DkrrNyCmSolver {
 public:
  DkrrNyCmSolver(std::span<const PartyDataset> parties, const SpanBasis& basis, double lambda);

  /// (M + lambda I) u
  Vector normal_operator(const Vector& u) const;
  /// sum_j w_j (M_j + lambda I)^{-1} v
  Vector preconditioned(const Vector& v) const;
  /// One damped step from u.
  Vector step(const Vector& u, double eta) const;
  const Vector& rhs() const { return b_; }
  double lambda() const { return lambda_; }

 private:
  struct Party {
    double weight;
    double n;
    Matrix a;        // K_XjZ
    Matrix ginv_at;  // K_ZZ^+ K_ZXj
    Eigen::LLT<Matrix> inner;  // n_j lambda I + A_j K_ZZ^+ A_j^T
  };
  const SpanBasis* basis_;
  double lambda_;
  double n_total_;
  std::vector<Party> parties_;
  Vector b_;
};

/// Damped communicate-and-average Newton iteration in span-Z coordinates:
///   u <- u - eta sum_j w_j (M_j + lambda I)^{-1} ((M + lambda I) u - b)
/// with M_j = (1/n_j) K_ZZ^+ K_ZXj K_XjZ, M = sum_j w_j M_j,
/// b = (1/n) K_ZZ^+ K_ZX y, from u = 0.
RkhsFunction dkrr_ny_cm(std::span<const PartyDataset> parties, const PointSet& z, const KernelSpec& kernel,
                        double lambda, double eta = 0.01, int iterations = 10);
RkhsFunction dkrr_ny_cm(std::span<const PartyDataset> parties, const SpanBasis& basis, double lambda,
                        double eta = 0.01, int iterations = 10);

/// sqrt(mean((f(x) - y)^2)) over the test set.
double evaluate_rmse(const RkhsFunction& f, const PartyDataset& test);

}  // namespace dclkr
