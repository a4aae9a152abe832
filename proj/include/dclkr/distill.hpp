#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "dclkr/types.hpp"

namespace dclkr::distill {

/// Linear feature kernel on the rows of F (p samples x c features): F F^T.
Matrix feature_gram(const Matrix& features);

/// sum_i w_i K_i. Weights must be nonnegative and sum to 1.
Matrix ensemble_gram(std::span<const Matrix> grams, std::span<const double> weights);

/// Empirical HSIC, tr(K1 H K2 H) / (p-1)^2 with H = I - 11^T/p.
double hsic(const Matrix& k1, const Matrix& k2);

/// HSIC(K1,K2) / sqrt(HSIC(K1,K1) HSIC(K2,K2)). Throws DegenerateInputError
/// when either self-HSIC is not positive.
double cka(const Matrix& k1, const Matrix& k2);

/// Gradient of cka(F F^T, K_target) with respect to F.
Matrix cka_grad(const Matrix& features, const Matrix& target);

/// Per-party learning rates eta0 * max_j sqrt(alpha_j) / sqrt(alpha_i) from
/// self-HSIC values alpha_i.
std::vector<double> lr_scale(std::span<const double> self_hsics, double eta0);

/// Self-HSIC of F F^T over a seeded subsample of at most `max_rows` rows.
double subsampled_self_hsic(const Matrix& features, std::uint64_t seed, Index max_rows = 512);

/// Result of first-order CKA ascent on explicit features.
struct MatchResult {
  Matrix features;
  std::vector<double> cka_path;  ///< cka before the first step and after every step
};

/// Plain gradient ascent of cka(F F^T, target) with fixed step size.
MatchResult match_kernel(const Matrix& init, const Matrix& target, double step, int iterations);

/// Feature CSV: header row of feature indices 0..c-1, one sample per row.
void write_feature_csv(std::ostream& out, const Matrix& features);
Matrix read_feature_csv(std::istream& in);

}  // namespace dclkr::distill
