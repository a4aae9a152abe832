#include "dclkr/distill.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "dclkr/error.hpp"
#include "dclkr/rng.hpp"

namespace dclkr::distill {

namespace {

void check_square(const Matrix& k, const char* what) {
  if (k.rows() != k.cols()) throw ConfigError(std::string(what) + " must be square");
}

// H K H. Shifting by K(0,0) first leaves the result unchanged and makes a
// constant matrix center to exact zeros.
Matrix centered(const Matrix& k) {
  const Matrix shifted = k.array() - k(0, 0);
  const Vector col_mean = shifted.colwise().mean().transpose();
  const Vector row_mean = shifted.rowwise().mean();
  const double grand = row_mean.mean();
  Matrix out = shifted;
  out.colwise() -= row_mean;
  out.rowwise() -= col_mean.transpose();
  out.array() += grand;
  return out;
}

double hsic_scale(Index p) {
  const double d = static_cast<double>(p - 1);
  return 1.0 / (d * d);
}

void check_pair(const Matrix& k1, const Matrix& k2) {
  check_square(k1, "HSIC input");
  check_square(k2, "HSIC input");
  if (k1.rows() != k2.rows()) throw ConfigError("HSIC inputs differ in size");
  if (k1.rows() < 2) throw ConfigError("HSIC needs at least two samples");
}

}  // namespace

Matrix feature_gram(const Matrix& features) {
  if (features.rows() < 2) throw ConfigError("feature matrix needs at least two rows");
  Matrix k = features * features.transpose();
  return 0.5 * (k + k.transpose());
}

Matrix ensemble_gram(std::span<const Matrix> grams, std::span<const double> weights) {
  if (grams.empty()) throw ConfigError("ensemble of zero Gram matrices");
  if (grams.size() != weights.size()) throw ConfigError("one weight per Gram matrix required");
  double sum = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("ensemble weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("ensemble weights must sum to 1");
  Matrix out = Matrix::Zero(grams[0].rows(), grams[0].cols());
  for (std::size_t i = 0; i < grams.size(); ++i) {
    if (grams[i].rows() != out.rows() || grams[i].cols() != out.cols()) {
      throw ConfigError("ensemble Gram matrices differ in shape");
    }
    out += weights[i] * grams[i];
  }
  return out;
}

double hsic(const Matrix& k1, const Matrix& k2) {
  check_pair(k1, k2);
  // tr(K1 H K2 H) = <H K1 H, H K2 H>_F since H is symmetric and idempotent.
  return centered(k1).cwiseProduct(centered(k2)).sum() * hsic_scale(k1.rows());
}

double cka(const Matrix& k1, const Matrix& k2) {
  check_pair(k1, k2);
  const Matrix c1 = centered(k1);
  const Matrix c2 = centered(k2);
  const double h11 = c1.squaredNorm();
  const double h22 = c2.squaredNorm();
  if (!(h11 > 0.0) || !(h22 > 0.0)) throw DegenerateInputError("CKA undefined: a Gram matrix has zero self-HSIC");
  return c1.cwiseProduct(c2).sum() / std::sqrt(h11 * h22);
}

// With K = F F^T, Kc = H K H, Tc = H T H and the (p-1)^2 factors cancelling:
//   cka = <Kc, Tc> / (|Kc| |Tc|)
//   dcka/dK = Tc / (|Kc||Tc|) - cka Kc / |Kc|^2   (symmetric, already centered)
//   dcka/dF = (G + G^T) F = 2 G F.
Matrix cka_grad(const Matrix& features, const Matrix& target) {
  const Matrix k = feature_gram(features);
  check_pair(k, target);
  const Matrix kc = centered(k);
  const Matrix tc = centered(target);
  const double nk = kc.norm();
  const double nt = tc.norm();
  if (!(nk > 0.0) || !(nt > 0.0)) throw DegenerateInputError("CKA undefined: a Gram matrix has zero self-HSIC");
  const double value = kc.cwiseProduct(tc).sum() / (nk * nt);
  Matrix g = tc / (nk * nt) - (value / (nk * nk)) * kc;
  g = 0.5 * (g + g.transpose()).eval();
  return 2.0 * g * features;
}

std::vector<double> lr_scale(std::span<const double> self_hsics, double eta0) {
  if (self_hsics.empty()) throw ConfigError("no self-HSIC values");
  if (!(eta0 > 0.0)) throw ConfigError("base learning rate must be positive");
  for (const double a : self_hsics) {
    if (!(a > 0.0)) throw DegenerateInputError("self-HSIC must be positive for learning-rate scaling");
  }
  const double top = std::sqrt(*std::max_element(self_hsics.begin(), self_hsics.end()));
  std::vector<double> out;
  out.reserve(self_hsics.size());
  for (const double a : self_hsics) out.push_back(eta0 * (top / std::sqrt(a)));
  return out;
}

double subsampled_self_hsic(const Matrix& features, std::uint64_t seed, Index max_rows) {
  if (max_rows < 2) throw ConfigError("HSIC subsample needs at least two rows");
  const Index p = features.rows();
  if (p <= max_rows) {
    const Matrix k = feature_gram(features);
    return hsic(k, k);
  }
  // Partial Fisher-Yates over row indices.
  std::vector<Index> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), Index{0});
  Rng rng(seed);
  for (Index i = 0; i < max_rows; ++i) {
    const auto j = i + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(p - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  std::sort(idx.begin(), idx.begin() + max_rows);
  Matrix sub(max_rows, features.cols());
  for (Index i = 0; i < max_rows; ++i) sub.row(i) = features.row(idx[static_cast<std::size_t>(i)]);
  const Matrix k = feature_gram(sub);
  return hsic(k, k);
}

MatchResult match_kernel(const Matrix& init, const Matrix& target, double step, int iterations) {
  if (!(step > 0.0)) throw ConfigError("ascent step must be positive");
  MatchResult res{init, {}};
  res.cka_path.push_back(cka(feature_gram(res.features), target));
  for (int t = 0; t < iterations; ++t) {
    res.features += step * cka_grad(res.features, target);
    res.cka_path.push_back(cka(feature_gram(res.features), target));
  }
  return res;
}

void write_feature_csv(std::ostream& out, const Matrix& features) {
  for (Index k = 0; k < features.cols(); ++k) out << (k == 0 ? "" : ",") << k;
  out << '\n';
  out.precision(std::numeric_limits<double>::max_digits10);
  for (Index i = 0; i < features.rows(); ++i) {
    for (Index k = 0; k < features.cols(); ++k) out << (k == 0 ? "" : ",") << features(i, k);
    out << '\n';
  }
}

Matrix read_feature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("feature CSV is empty");
  const auto cols = static_cast<Index>(std::count(line.begin(), line.end(), ',') + 1);
  std::vector<double> values;
  Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Index got = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("feature CSV has a non-numeric cell '" + cell + "'");
      }
      ++got;
    }
    if (got != cols) throw ConfigError("feature CSV row " + std::to_string(rows + 1) + " has wrong arity");
    ++rows;
  }
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index k = 0; k < cols; ++k) out(i, k) = values[static_cast<std::size_t>(i * cols + k)];
  }
  return out;
}

}  // namespace dclkr::distill
