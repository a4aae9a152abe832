#include "dclkr/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <optional>
#include <string>
#include <thread>

#include <Eigen/SVD>

#include "dclkr/error.hpp"
#include "dclkr/gram.hpp"
#include "dclkr/local_solvers.hpp"

namespace dclkr {

void FederationConfig::validate() const {
  if (rounds < 1) throw ConfigError("communication rounds T must be at least 1");
  if (local_steps < 1) throw ConfigError("local iterations E must be at least 1");
  check_learning_rate(eta, kernel);
  if (weights.empty()) throw ConfigError("federation has no parties");
  double sum = 0.0;
  for (const double w : weights) {
    if (!(w > 0.0)) throw ConfigError("party weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("party weights must sum to 1");
  if (public_inputs.rows() < 1) throw ConfigError("public input set Z is empty");
  kernel.check_points(public_inputs, "public inputs");
}

std::vector<double> weights_from_sizes(std::span<const PartyDataset> parties) {
  double n = 0.0;
  for (const auto& p : parties) n += static_cast<double>(p.size());
  if (!(n > 0.0)) throw ConfigError("parties hold no data");
  std::vector<double> w;
  w.reserve(parties.size());
  for (const auto& p : parties) w.push_back(static_cast<double>(p.size()) / n);
  return w;
}

namespace {

void check_parties(std::span<const PartyDataset> parties, const FederationConfig& cfg) {
  cfg.validate();
  if (parties.size() != cfg.weights.size()) {
    throw ConfigError("got " + std::to_string(parties.size()) + " parties but " +
                      std::to_string(cfg.weights.size()) + " weights");
  }
  for (const auto& p : parties) {
    if (p.empty()) throw ConfigError("every party must hold at least one sample");
  }
}

double rmse(const Vector& pred, const Vector& y) {
  return std::sqrt((pred - y).squaredNorm() / static_cast<double>(y.size()));
}

// Runs body(i) for i in [0, count) on up to `workers` threads.
template <typename Body>
void fan_out(std::size_t count, unsigned workers, Body&& body) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const unsigned used = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  std::vector<std::exception_ptr> errors(used);
  {
    std::vector<std::jthread> pool;
    pool.reserve(used);
    for (unsigned w = 0; w < used; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < count; i += used) body(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

DclKrResult dcl_kr(std::span<const PartyDataset> parties, const FederationConfig& cfg, const DclKrOptions& opts) {
  check_parties(parties, cfg);
  std::optional<SpanBasis> own_basis;
  if (opts.basis == nullptr) own_basis.emplace(cfg.kernel, cfg.public_inputs);
  const SpanBasis& basis = opts.basis != nullptr ? *opts.basis : *own_basis;
  if (!(basis.kernel() == cfg.kernel) || basis.size() != cfg.public_inputs.rows()) {
    throw ConfigError("supplied span basis does not match the federation config");
  }

  std::vector<PartyWorkspace> workspaces;
  workspaces.reserve(parties.size());
  for (const auto& p : parties) workspaces.emplace_back(cfg.kernel, p, basis.points());

  Matrix k_holdout;
  if (opts.holdout != nullptr) k_holdout = gram(cfg.kernel, opts.holdout->x, basis.points());

  const Index n0 = basis.size();
  // The single shared model; every party starts each round from it.
  Vector c = Vector::Zero(n0);
  Vector kzz_c = Vector::Zero(n0);
  std::vector<LocalUpdate> updates(parties.size());
  RoundTrace trace;
  trace.consensus.reserve(static_cast<std::size_t>(cfg.rounds));

  for (int t = 0; t < cfg.rounds; ++t) {
    fan_out(parties.size(), opts.workers,
            [&](std::size_t i) { updates[i] = workspaces[i].run(c, kzz_c, cfg.eta, cfg.local_steps); });

    Vector consensus = Vector::Zero(n0);
    for (std::size_t i = 0; i < parties.size(); ++i) consensus += cfg.weights[i] * updates[i].preds_z;

    c = basis.interpolate(consensus);
    kzz_c.noalias() = basis.gram() * c;
    if (opts.holdout != nullptr) trace.holdout_rmse.push_back(rmse(k_holdout * c, opts.holdout->y));
    trace.consensus.push_back(std::move(consensus));
  }
  return {RkhsFunction(cfg.kernel, basis.points(), std::move(c)), std::move(trace)};
}

Vector dcl_kr_recurrence_oracle(std::span<const PartyDataset> parties, const FederationConfig& cfg) {
  if (cfg.rounds == 0) {
    // T = 0 is allowed here: f_0 = 0.
    return Vector::Zero(cfg.public_inputs.rows());
  }
  check_parties(parties, cfg);
  Index n = 0;
  for (const auto& p : parties) n += p.size();
  const Index n0 = cfg.public_inputs.rows();
  const Index total = n + n0;
  if (total > kOracleMaxPoints) {
    throw InstanceTooLargeError("recurrence oracle limited to " + std::to_string(kOracleMaxPoints) +
                                " joint points, got " + std::to_string(total));
  }
  const int dim = cfg.kernel.dim();

  // Joint point set P = [X_1; ...; X_m; Z]; functions are coefficient vectors over P.
  PointSet pts(total, dim);
  std::vector<Index> offset;
  Index row = 0;
  for (const auto& p : parties) {
    offset.push_back(row);
    pts.middleRows(row, p.size()) = p.x;
    row += p.size();
  }
  pts.bottomRows(n0) = cfg.public_inputs;
  const Matrix kpp = gram(cfg.kernel, pts);
  const Matrix kzp = kpp.bottomRows(n0);
  const Matrix kzz = kzp.rightCols(n0);

  // P_Z c = E_Z K_ZZ^+ K_ZP c, pseudo-inverse by SVD with the same relative cutoff.
  Eigen::BDCSVD<Matrix> svd(kzz, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(PsdPseudoInverse::kRelativeCutoff);
  Matrix proj = Matrix::Zero(total, total);
  proj.bottomRows(n0) = svd.solve(kzp);

  const Matrix eye = Matrix::Identity(total, total);
  Matrix a = Matrix::Zero(total, total);
  Vector b = Vector::Zero(total);
  for (std::size_t i = 0; i < parties.size(); ++i) {
    const auto& p = parties[i];
    const double ni = static_cast<double>(p.size());
    Matrix t_i = Matrix::Zero(total, total);
    t_i.middleRows(offset[i], p.size()) = kpp.middleRows(offset[i], p.size()) / ni;
    Vector s_i = Vector::Zero(total);
    s_i.segment(offset[i], p.size()) = p.y / ni;

    const Matrix tbar = eye - cfg.eta * t_i;
    Matrix power = eye;  // Tbar^s
    Vector drift = Vector::Zero(total);
    for (int s = 0; s < cfg.local_steps; ++s) {
      drift += power * s_i;
      power = tbar * power;
    }
    a += cfg.weights[i] * power;
    b += cfg.weights[i] * cfg.eta * drift;
  }

  Vector f = Vector::Zero(total);
  for (int t = 0; t < cfg.rounds; ++t) f = proj * (a * f + b);
  return kzp * f;
}

RkhsFunction dc_ny(std::span<const PartyDataset> parties, const SpanBasis& basis, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("ridge parameter must be positive");
  double n = 0.0;
  for (const auto& p : parties) n += static_cast<double>(p.size());
  if (!(n > 0.0)) throw ConfigError("parties hold no data");
  Vector coeffs = Vector::Zero(basis.size());
  for (const auto& p : parties) {
    if (p.empty()) continue;  // zero weight
    coeffs += (static_cast<double>(p.size()) / n) * nystrom_krr(basis, p, lambda).coeffs();
  }
  return {basis.kernel(), basis.points(), std::move(coeffs)};
}

RkhsFunction dc_ny(std::span<const PartyDataset> parties, const PointSet& z, const KernelSpec& kernel, double lambda) {
  return dc_ny(parties, SpanBasis(kernel, z), lambda);
}

DkrrNyCmSolver::DkrrNyCmSolver(std::span<const PartyDataset> parties, const SpanBasis& basis, double lambda)
    : basis_(&basis), lambda_(lambda), n_total_(0.0) {
  if (!(lambda > 0.0)) throw ConfigError("ridge parameter must be positive");
  for (const auto& p : parties) n_total_ += static_cast<double>(p.size());
  if (!(n_total_ > 0.0)) throw ConfigError("parties hold no data");

  Vector zty = Vector::Zero(basis.size());
  for (const auto& p : parties) {
    if (p.empty()) continue;
    basis.kernel().check_points(p.x, "party inputs");
    Party party;
    party.n = static_cast<double>(p.size());
    party.weight = party.n / n_total_;
    party.a = gram(basis.kernel(), p.x, basis.points());
    party.ginv_at = basis.pinv().solve(Matrix(party.a.transpose()));
    Matrix inner = party.a * party.ginv_at;
    inner = 0.5 * (inner + inner.transpose()).eval();
    inner.diagonal().array() += party.n * lambda;
    party.inner.compute(inner);
    if (party.inner.info() != Eigen::Success) throw SolveError("DKRR-NY-CM local system is not positive definite");
    zty.noalias() += party.a.transpose() * p.y;
    parties_.push_back(std::move(party));
  }
  b_ = basis.pinv().solve(Vector(zty / n_total_));
}

Vector DkrrNyCmSolver::normal_operator(const Vector& u) const {
  Vector acc = Vector::Zero(u.size());
  for (const auto& p : parties_) acc.noalias() += p.a.transpose() * (p.a * u);
  Vector out = basis_->pinv().solve(Vector(acc / n_total_));
  out += lambda_ * u;
  return out;
}

// (lambda I + (1/n_j) U A)^{-1} v = (1/lambda) (v - U (n_j lambda I + A U)^{-1} A v)
// with U = K_ZZ^+ A^T, A = K_XjZ.
Vector DkrrNyCmSolver::preconditioned(const Vector& v) const {
  Vector out = Vector::Zero(v.size());
  for (const auto& p : parties_) {
    const Vector inner = p.inner.solve(p.a * v);
    out += p.weight * ((v - p.ginv_at * inner) / lambda_);
  }
  if (!out.allFinite()) throw SolveError("DKRR-NY-CM preconditioned solve produced non-finite values");
  return out;
}

Vector DkrrNyCmSolver::step(const Vector& u, double eta) const {
  return u - eta * preconditioned(normal_operator(u) - b_);
}

RkhsFunction dkrr_ny_cm(std::span<const PartyDataset> parties, const SpanBasis& basis, double lambda, double eta,
                        int iterations) {
  if (!(eta > 0.0)) throw ConfigError("DKRR-NY-CM learning rate must be positive");
  if (iterations < 0) throw ConfigError("iteration count must be nonnegative");
  const DkrrNyCmSolver solver(parties, basis, lambda);
  Vector u = Vector::Zero(basis.size());
  for (int t = 0; t < iterations; ++t) u = solver.step(u, eta);
  return {basis.kernel(), basis.points(), std::move(u)};
}

RkhsFunction dkrr_ny_cm(std::span<const PartyDataset> parties, const PointSet& z, const KernelSpec& kernel,
                        double lambda, double eta, int iterations) {
  return dkrr_ny_cm(parties, SpanBasis(kernel, z), lambda, eta, iterations);
}

double evaluate_rmse(const RkhsFunction& f, const PartyDataset& test) {
  if (test.empty()) throw ConfigError("test set is empty");
  if (test.y.size() != test.x.rows()) throw ConfigError("test inputs and labels differ in length");
  return rmse(f.evaluate(test.x), test.y);
}

}  // namespace dclkr
