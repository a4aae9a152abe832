#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dclkr/datagen.hpp"
#include "dclkr/types.hpp"

namespace dclkr::bench {

enum class Algorithm { DclKr, CentralKrr, CentralKrgd, DcNy, DkrrNyCm };

inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::DclKr, Algorithm::CentralKrr, Algorithm::CentralKrgd,
                                               Algorithm::DcNy, Algorithm::DkrrNyCm};

std::string algorithm_name(Algorithm a);
Algorithm parse_algorithm(std::string_view name);
/// Ridge methods are scheduled by lambda = C n^(-1/(2r+s)); GD methods by
/// T = int(D n^(1/(2r+s))).
bool uses_ridge(Algorithm a);

/// How the DCL-KR schedule constant D is turned into a round count.
enum class RoundsRule {
  Rounds,          ///< T = int(D n^(1/(2r+s))) communication rounds, E local steps each
  TotalIterations  ///< T = int(D n^(1/(2r+s)) / E), so that T * E matches the rule
};

struct SweepConfig {
  TaskSpec task = TaskSpec::toy1d();
  std::vector<Algorithm> algorithms{Algorithm::DclKr};
  std::vector<int> m_values{10, 20, 40, 80};
  int n_per_party = 50;  ///< n = n_per_party * m
  double n0_alpha = 1.0;
  double beta = 1.0;
  int repetitions = 20;
  std::uint64_t seed = 0;
  Index test_size = 2000;
  double eta = 0.5;
  int local_steps = 5;
  RoundsRule rounds_rule = RoundsRule::Rounds;
  double dkrr_eta = 0.01;
  int dkrr_iterations = 10;
  /// Per-algorithm C (ridge) or D (GD) constant.
  std::map<Algorithm, double> constants;
  bool record_timing = true;
  bool trace_rounds = false;  ///< also emit per-round DCL-KR records
  unsigned workers = 1;       ///< concurrent (m, repetition) jobs

  /// Constants from the tuned hyperparameter table for the task.
  static std::map<Algorithm, double> default_constants(TaskKind task);
  static SweepConfig defaults_for(const TaskSpec& task);

  double constant(Algorithm a) const;
  /// Throws ConfigError on invalid settings.
  void validate() const;
};

struct RunRecord {
  std::string algorithm;
  int m = 0;
  Index n = 0;
  Index n0 = 0;
  std::uint64_t seed = 0;
  int round = -1;  ///< -1 marks the final model
  double rmse = 0.0;
  double wall_ms = 0.0;
};

inline constexpr const char* kCsvHeader = "algorithm,m,n,n0,seed,round,rmse,wall_ms";

/// Seed of one (m, repetition) cell; every random draw of that run derives from it.
std::uint64_t run_seed(std::uint64_t base, int m, int repetition);

/// Schedules for a given total sample size.
int gd_iterations(double constant, Index n, const TaskSpec& task);
double ridge_lambda(double constant, Index n, const TaskSpec& task);
int dcl_rounds(const SweepConfig& cfg, Index n);

/// One (m, repetition) cell: data, partition, public inputs, every algorithm,
/// RMSE on a fresh test sample. Records come back in algorithm order.
std::vector<RunRecord> run_single(const SweepConfig& cfg, int m, int repetition);

/// All cells, ordered by (algorithm, m, repetition).
std::vector<RunRecord> run_sweep(const SweepConfig& cfg);

void write_csv(std::ostream& out, std::span<const RunRecord> records);
void write_json(std::ostream& out, std::span<const RunRecord> records);

struct MeanPoint {
  int m = 0;
  Index n = 0;
  double mean_rmse = 0.0;
  int count = 0;
};

/// Mean final-round RMSE per m for one algorithm, ascending m.
std::vector<MeanPoint> mean_final_rmse(std::span<const RunRecord> records, std::string_view algorithm);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  ///< root-mean-square residual in log10 units
};

/// Least squares line through (log10 n, log10 rmse).
SlopeFit fit_loglog_slope(std::span<const std::pair<double, double>> points);

/// sum_i lambda_i / (lambda_i + lambda), tiny negative eigenvalues clipped to 0.
double effective_dimension(std::span<const double> eigvals, double lambda);

/// sqrt((1/n) sum_i min(lambda_i, epsilon^2)).
double rademacher_r(std::span<const double> eigvals, double epsilon, Index n);

/// Eigenvalues of (1/n) K on the given points, descending.
std::vector<double> normalized_gram_spectrum(const KernelSpec& kernel, const PointSet& points);

/// Reads an INI-style file ([sweep] plus one section per algorithm) on top of `base`.
SweepConfig load_sweep_config(const std::string& path, SweepConfig base);

}  // namespace dclkr::bench
