#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dclkr/kernel.hpp"
#include "dclkr/rng.hpp"
#include "dclkr/types.hpp"

namespace dclkr {

enum class TaskKind { Toy1D, Toy3D };

/// A synthetic regression task on [0,1]^d with a known target function.
///
/// Toy1D: k = min(x,y), target sum_i sqrt(2)/i^3 sin((2i-1) pi x / 2),
///        source exponent r = 1, eigendecay s = 1/2.
/// Toy3D: k = (1-|x-y|)_+^2, target (1-|x|)_+^6 (35|x|^2 + 18|x| + 3),
///        r = 1, s = 3/4.
struct TaskSpec {
  TaskKind kind = TaskKind::Toy1D;
  int truncation = 200;  ///< Toy1D series order
  double noise_sd = 0.44;

  static TaskSpec toy1d() { return {TaskKind::Toy1D}; }
  static TaskSpec toy3d() { return {TaskKind::Toy3D}; }
  static TaskSpec parse(std::string_view name);

  double r() const { return 1.0; }
  double s() const { return kind == TaskKind::Toy1D ? 0.5 : 0.75; }
  int dim() const { return kind == TaskKind::Toy1D ? 1 : 3; }
  /// n^(1/(2r+s)) is the scale of every hyperparameter rule.
  double rate_exponent() const { return 1.0 / (2.0 * r() + s()); }
  KernelSpec kernel() const;
  std::string name() const;
  double target(std::span<const double> x) const;
};

/// Partial sum of the Toy1D target to `truncation` terms. The omitted tail is
/// bounded by sqrt(2) / (2 I^2).
double target_toy1d(double x, int truncation = 200);
double target_toy3d(std::span<const double> x);

/// Closed axis-aligned box [lo, hi] in [0,1]^d.
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  bool contains(std::span<const double> x) const;
  double volume() const;
};

struct PartitionSpec {
  std::vector<Box> cells;
  double dirichlet_alpha = 10.0;
  int max_retries = 10000;

  /// splits^dim congruent boxes covering [0,1]^dim.
  static PartitionSpec grid(int dim, int splits);
  /// Toy1D: eight intervals [i/8, (i+1)/8]; Toy3D: the eight octants of side 1/2.
  static PartitionSpec for_task(const TaskSpec& task);

  /// Throws ConfigError unless the cells tile [0,1]^dim.
  void validate(int dim) const;
  /// Index of the first cell containing x, or -1.
  int cell_of(std::span<const double> x) const;
};

/// Labelled pool drawn from the task: uniform inputs, Gaussian label noise.
PartyDataset sample_task(const TaskSpec& task, Index n, Rng& rng);

/// Public inputs with per-coordinate density (2 - 2 beta) x + beta on [0,1].
PointSet sample_public(Index n0, double beta, int dim, Rng& rng);

struct PartitionResult {
  std::vector<PartyDataset> parties;
  std::vector<std::vector<Index>> pool_indices;  ///< rows of the pool given to each party
  std::vector<double> base_ratio;                ///< Dirichlet draw alpha_1..alpha_m
  std::vector<std::vector<int>> coverage;        ///< coverage[cell][party] in {0,1}
  int attempts = 0;                              ///< cell draws until full coverage
};

/// Non-iid split: base ratio from Dir(a,...,a); each party draws two cells
/// uniformly (with replacement) until every cell is covered; each point of
/// cell i goes to party k with probability alpha_k C_ik / sum_j alpha_j C_ij.
/// Throws CoverageError after spec.max_retries redraws.
PartitionResult partition_noniid_detailed(const PartyDataset& pool, int m, const PartitionSpec& spec, Rng& rng);
std::vector<PartyDataset> partition_noniid(const PartyDataset& pool, int m, const PartitionSpec& spec, Rng& rng);

/// round(alpha * n^(1/(2r+s)) * (log10 n)^3), at least 1. Requires n >= 10.
Index public_count_rule(Index n, double r, double s, double alpha = 1.0);

/// CSV with header x_1,...,x_d,y.
void write_dataset_csv(std::ostream& out, const PartyDataset& data);
PartyDataset read_dataset_csv(std::istream& in);

}  // namespace dclkr
