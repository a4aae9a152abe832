#include "dclkr/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "dclkr/error.hpp"

namespace dclkr {

TaskSpec TaskSpec::parse(std::string_view name) {
  if (name == "toy1d" || name == "toy-1d") return toy1d();
  if (name == "toy3d" || name == "toy-3d") return toy3d();
  throw ConfigError("unknown task '" + std::string(name) + "' (expected toy1d or toy3d)");
}

KernelSpec TaskSpec::kernel() const {
  return kind == TaskKind::Toy1D ? KernelSpec::min_kernel() : KernelSpec::wendland0(3);
}

std::string TaskSpec::name() const { return kind == TaskKind::Toy1D ? "toy1d" : "toy3d"; }

double TaskSpec::target(std::span<const double> x) const {
  if (kind == TaskKind::Toy1D) return target_toy1d(x[0], truncation);
  return target_toy3d(x);
}

double target_toy1d(double x, int truncation) {
  if (truncation < 1) throw ConfigError("series truncation must be positive");
  double sum = 0.0;
  // Smallest terms first.
  for (int i = truncation; i >= 1; --i) {
    const double di = static_cast<double>(i);
    sum += std::numbers::sqrt2 / (di * di * di) * std::sin((2.0 * di - 1.0) * std::numbers::pi * x / 2.0);
  }
  return sum;
}

double target_toy3d(std::span<const double> x) {
  double r2 = 0.0;
  for (const double v : x) r2 += v * v;
  const double r = std::sqrt(r2);
  const double t = std::max(1.0 - r, 0.0);
  const double t2 = t * t;
  return t2 * t2 * t2 * (35.0 * r2 + 18.0 * r + 3.0);
}

bool Box::contains(std::span<const double> x) const {
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] < lo[k] || x[k] > hi[k]) return false;
  }
  return true;
}

double Box::volume() const {
  double v = 1.0;
  for (std::size_t k = 0; k < lo.size(); ++k) v *= std::max(hi[k] - lo[k], 0.0);
  return v;
}

PartitionSpec PartitionSpec::grid(int dim, int splits) {
  if (dim < 1 || splits < 1) throw ConfigError("grid partition needs positive dim and splits");
  PartitionSpec spec;
  int total = 1;
  for (int k = 0; k < dim; ++k) total *= splits;
  for (int idx = 0; idx < total; ++idx) {
    Box box{std::vector<double>(dim), std::vector<double>(dim)};
    int rest = idx;
    // First coordinate varies slowest.
    for (int k = dim - 1; k >= 0; --k) {
      const int cell = rest % splits;
      rest /= splits;
      box.lo[k] = static_cast<double>(cell) / splits;
      box.hi[k] = static_cast<double>(cell + 1) / splits;
    }
    spec.cells.push_back(std::move(box));
  }
  return spec;
}

PartitionSpec PartitionSpec::for_task(const TaskSpec& task) {
  return task.kind == TaskKind::Toy1D ? grid(1, 8) : grid(3, 2);
}

void PartitionSpec::validate(int dim) const {
  if (cells.empty()) throw ConfigError("partition has no cells");
  if (!(dirichlet_alpha > 0.0)) throw ConfigError("Dirichlet concentration must be positive");
  if (max_retries < 1) throw ConfigError("max_retries must be positive");
  double total = 0.0;
  for (std::size_t a = 0; a < cells.size(); ++a) {
    const Box& box = cells[a];
    if (box.lo.size() != static_cast<std::size_t>(dim) || box.hi.size() != static_cast<std::size_t>(dim)) {
      throw ConfigError("partition cell has wrong dimension");
    }
    for (int k = 0; k < dim; ++k) {
      if (!(box.lo[k] >= 0.0 && box.hi[k] <= 1.0 && box.lo[k] < box.hi[k])) {
        throw ConfigError("partition cell is empty or leaves [0,1]^d");
      }
    }
    total += box.volume();
    for (std::size_t b = a + 1; b < cells.size(); ++b) {
      double overlap = 1.0;
      for (int k = 0; k < dim; ++k) {
        overlap *= std::max(0.0, std::min(box.hi[k], cells[b].hi[k]) - std::max(box.lo[k], cells[b].lo[k]));
      }
      if (overlap > 1e-12) throw ConfigError("partition cells overlap");
    }
  }
  // Disjoint interiors plus total volume one means the cells tile the cube.
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("partition cells do not cover [0,1]^d");
}

int PartitionSpec::cell_of(std::span<const double> x) const {
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c].contains(x)) return static_cast<int>(c);
  }
  return -1;
}

namespace {

std::vector<double> row(const PointSet& x, Index i) {
  std::vector<double> out(static_cast<std::size_t>(x.cols()));
  for (Index k = 0; k < x.cols(); ++k) out[static_cast<std::size_t>(k)] = x(i, k);
  return out;
}

}  // namespace

PartyDataset sample_task(const TaskSpec& task, Index n, Rng& rng) {
  if (n < 1) throw ConfigError("sample size must be positive");
  if (!(task.noise_sd >= 0.0)) throw ConfigError("noise standard deviation must be nonnegative");
  PartyDataset out{PointSet(n, task.dim()), Vector(n)};
  for (Index i = 0; i < n; ++i) {
    for (int k = 0; k < task.dim(); ++k) out.x(i, k) = rng.uniform();
  }
  for (Index i = 0; i < n; ++i) {
    const auto xi = row(out.x, i);
    const double noise = task.noise_sd > 0.0 ? task.noise_sd * rng.normal() : 0.0;
    out.y(i) = task.target(xi) + noise;
  }
  return out;
}

PointSet sample_public(Index n0, double beta, int dim, Rng& rng) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("public-input tilt beta must lie in (0, 1]");
  if (n0 < 0 || dim < 1) throw ConfigError("invalid public sample shape");
  PointSet z(n0, dim);
  for (Index i = 0; i < n0; ++i) {
    for (int k = 0; k < dim; ++k) {
      const double u = rng.uniform();
      if (beta == 1.0) {
        z(i, k) = u;
      } else {
        // Inverse of F(x) = (1 - beta) x^2 + beta x.
        const double a = 1.0 - beta;
        z(i, k) = (-beta + std::sqrt(beta * beta + 4.0 * a * u)) / (2.0 * a);
      }
    }
  }
  return z;
}

PartitionResult partition_noniid_detailed(const PartyDataset& pool, int m, const PartitionSpec& spec, Rng& rng) {
  if (m < 1) throw ConfigError("number of parties must be positive");
  spec.validate(static_cast<int>(pool.dim()));
  const auto n_cells = spec.cells.size();

  PartitionResult res;
  res.base_ratio.resize(static_cast<std::size_t>(m));
  double total = 0.0;
  for (auto& a : res.base_ratio) {
    a = rng.gamma(spec.dirichlet_alpha);
    total += a;
  }
  for (auto& a : res.base_ratio) a /= total;

  // Draw cell pairs until every cell has at least one party; the first draw
  // is not a retry.
  for (int attempt = 0;; ++attempt) {
    if (attempt > spec.max_retries) {
      throw CoverageError("partition coverage not achieved for m=" + std::to_string(m) + " and " +
                              std::to_string(n_cells) + " cells after " + std::to_string(spec.max_retries) +
                              " redraws",
                          attempt);
    }
    res.coverage.assign(n_cells, std::vector<int>(static_cast<std::size_t>(m), 0));
    for (int j = 0; j < m; ++j) {
      for (int draw = 0; draw < 2; ++draw) {
        res.coverage[rng.uniform_index(n_cells)][static_cast<std::size_t>(j)] = 1;
      }
    }
    res.attempts = attempt + 1;
    const bool covered = std::all_of(res.coverage.begin(), res.coverage.end(), [](const std::vector<int>& c) {
      return std::any_of(c.begin(), c.end(), [](int v) { return v != 0; });
    });
    if (covered) break;
  }

  // Cumulative allocation weights per cell.
  std::vector<std::vector<double>> cumulative(n_cells, std::vector<double>(static_cast<std::size_t>(m)));
  for (std::size_t c = 0; c < n_cells; ++c) {
    double acc = 0.0;
    for (int j = 0; j < m; ++j) {
      acc += res.base_ratio[static_cast<std::size_t>(j)] * res.coverage[c][static_cast<std::size_t>(j)];
      cumulative[c][static_cast<std::size_t>(j)] = acc;
    }
  }

  res.pool_indices.assign(static_cast<std::size_t>(m), {});
  for (Index i = 0; i < pool.size(); ++i) {
    const int c = spec.cell_of(row(pool.x, i));
    if (c < 0) throw ConfigError("pool point lies outside every partition cell");
    const auto& cum = cumulative[static_cast<std::size_t>(c)];
    const double u = rng.uniform() * cum.back();
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    // u < cum.back(), and a party with zero weight repeats its predecessor's
    // cumulative value, so upper_bound always lands on a covering party.
    const auto owner = static_cast<std::size_t>(it - cum.begin());
    res.pool_indices[owner].push_back(i);
  }

  res.parties.reserve(static_cast<std::size_t>(m));
  for (const auto& idx : res.pool_indices) {
    PartyDataset party{PointSet(static_cast<Index>(idx.size()), pool.dim()), Vector(static_cast<Index>(idx.size()))};
    for (std::size_t r = 0; r < idx.size(); ++r) {
      party.x.row(static_cast<Index>(r)) = pool.x.row(idx[r]);
      party.y(static_cast<Index>(r)) = pool.y(idx[r]);
    }
    res.parties.push_back(std::move(party));
  }
  return res;
}

std::vector<PartyDataset> partition_noniid(const PartyDataset& pool, int m, const PartitionSpec& spec, Rng& rng) {
  return partition_noniid_detailed(pool, m, spec, rng).parties;
}

Index public_count_rule(Index n, double r, double s, double alpha) {
  if (n < 10) throw ConfigError("public_count_rule needs n >= 10");
  if (!(alpha > 0.0)) throw ConfigError("public-count multiplier must be positive");
  const double dn = static_cast<double>(n);
  const double l = std::log10(dn);
  const double raw = alpha * std::pow(dn, 1.0 / (2.0 * r + s)) * l * l * l;
  return std::max<Index>(1, static_cast<Index>(std::llround(raw)));
}

void write_dataset_csv(std::ostream& out, const PartyDataset& data) {
  for (Index k = 0; k < data.dim(); ++k) out << "x_" << (k + 1) << ',';
  out << "y\n";
  out.precision(std::numeric_limits<double>::max_digits10);
  for (Index i = 0; i < data.size(); ++i) {
    for (Index k = 0; k < data.dim(); ++k) out << data.x(i, k) << ',';
    out << data.y(i) << '\n';
  }
}

PartyDataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset CSV is empty");
  const auto cols = static_cast<Index>(std::count(line.begin(), line.end(), ',') + 1);
  if (cols < 2) throw ConfigError("dataset CSV needs at least one input column and y");
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
        throw ConfigError("dataset CSV has a non-numeric cell '" + cell + "'");
      }
      ++got;
    }
    if (got != cols) throw ConfigError("dataset CSV row " + std::to_string(rows + 1) + " has wrong arity");
    ++rows;
  }
  PartyDataset out{PointSet(rows, cols - 1), Vector(rows)};
  for (Index i = 0; i < rows; ++i) {
    for (Index k = 0; k + 1 < cols; ++k) out.x(i, k) = values[static_cast<std::size_t>(i * cols + k)];
    out.y(i) = values[static_cast<std::size_t>(i * cols + cols - 1)];
  }
  return out;
}

}  // namespace dclkr
