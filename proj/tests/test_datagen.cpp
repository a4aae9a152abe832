#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "test_util.hpp"

#include "dclkr/datagen.hpp"
#include "dclkr/error.hpp"

using namespace dclkr;
using namespace dclkr::test;

namespace {

// Kolmogorov-Smirnov statistic of a sample against a CDF.
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

PartyDataset uniform_pool(Index n, int dim, Rng& rng) {
  PartyDataset pool{random_points(n, dim, rng), Vector(n)};
  for (Index i = 0; i < n; ++i) pool.y(i) = static_cast<double>(i);  // row id as label
  return pool;
}

}  // namespace

TEST_SUITE("datagen") {

TEST_CASE("task constants") {
  const auto t1 = TaskSpec::toy1d(), t3 = TaskSpec::toy3d();
  CHECK(t1.r() == 1.0);
  CHECK(t1.s() == 0.5);
  CHECK(t3.s() == 0.75);
  CHECK(t1.noise_sd == 0.44);
  CHECK(t1.truncation == 200);
  CHECK(t1.kernel() == KernelSpec::min_kernel());
  CHECK(t3.kernel() == KernelSpec::wendland0(3));
  CHECK(TaskSpec::parse("toy3d").kind == TaskKind::Toy3D);
  CHECK_THROWS_AS(TaskSpec::parse("toy2d"), ConfigError);
}

TEST_CASE("Toy-3D target") {
  const double o[] = {0, 0, 0}, half[] = {0.5, 0, 0}, far[] = {0.6, 0.6, 0.6}, edge[] = {1, 0, 0};
  CHECK(target_toy3d(o) == 3.0);
  CHECK(target_toy3d(half) == 0.32421875);
  CHECK(target_toy3d(far) == 0.0);
  CHECK(target_toy3d(edge) == 0.0);
}

TEST_CASE("Toy-1D target") {
  CHECK(target_toy1d(0.0) == 0.0);
  // High-order reference for the alternating series, summed smallest first.
  double ref = 0.0;
  for (int i = 2000000; i >= 1; --i) ref += (i % 2 ? 1.0 : -1.0) / std::pow(static_cast<double>(i), 3);
  ref *= std::numbers::sqrt2;
  const double tail = std::numbers::sqrt2 / (2.0 * 200.0 * 200.0);
  CHECK(std::abs(target_toy1d(1.0) - ref) <= tail);
  CHECK(target_toy1d(1.0) == doctest::Approx(1.27498).epsilon(1e-4));
  // 3 zeta(3) / 4 closed form.
  CHECK(ref == doctest::Approx(std::numbers::sqrt2 * 0.75 * 1.2020569031595942).epsilon(1e-12));
}

TEST_CASE("Toy-1D truncation soundness") {
  for (const int trunc : {5, 20, 100, 200}) {
    const double bound = std::numbers::sqrt2 / (2.0 * trunc * trunc);
    for (int j = 0; j <= 100; ++j) {
      const double x = j / 100.0;
      CHECK(std::abs(target_toy1d(x, 2 * trunc) - target_toy1d(x, trunc)) <= bound);
    }
  }
}

TEST_CASE("sample_task") {
  SUBCASE("noise-free labels equal the target") {
    TaskSpec t = TaskSpec::toy3d();
    t.noise_sd = 0.0;
    Rng rng(1);
    const auto d = sample_task(t, 200, rng);
    for (Index i = 0; i < 200; ++i) {
      const Vector xi = d.x.row(i).transpose();
      CHECK(d.y(i) == t.target(std::span<const double>(xi.data(), 3)));
    }
    CHECK(d.x.minCoeff() >= 0.0);
    CHECK(d.x.maxCoeff() < 1.0);
  }
  SUBCASE("fixed seed gives identical data") {
    Rng a(42), b(42);
    const auto da = sample_task(TaskSpec::toy1d(), 100, a), db = sample_task(TaskSpec::toy1d(), 100, b);
    CHECK(da.x == db.x);
    CHECK(da.y == db.y);
  }
  SUBCASE("label variance is Var(f0*) + noise variance") {
    // Reference moments of f0* by midpoint quadrature, independent of the sampler.
    const int grid = 20000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < grid; ++i) {
      const double f = target_toy1d((i + 0.5) / grid);
      s1 += f;
      s2 += f * f;
    }
    const double var_f = s2 / grid - (s1 / grid) * (s1 / grid);
    const double expected = var_f + 0.44 * 0.44;
    CHECK(expected == doctest::Approx(0.311745).epsilon(1e-4));
    Rng rng(7);
    const auto d = sample_task(TaskSpec::toy1d(), 100000, rng);
    const double mean = d.y.mean();
    const double var = (d.y.array() - mean).square().sum() / static_cast<double>(d.y.size() - 1);
    CHECK(var == doctest::Approx(expected).epsilon(0.03));
  }
}

TEST_CASE("sample_public") {
  SUBCASE("beta = 1 is uniform") {
    Rng rng(3);
    const PointSet z = sample_public(10000, 1.0, 1, rng);
    std::vector<double> xs(z.data(), z.data() + z.size());
    CHECK(ks_statistic(xs, [](double x) { return x; }) < 0.02);
  }
  SUBCASE("beta = 0.5 follows the tilted CDF") {
    Rng rng(4);
    const double beta = 0.5;
    const PointSet z = sample_public(100000, beta, 3, rng);
    CHECK(z.minCoeff() >= 0.0);
    CHECK(z.maxCoeff() <= 1.0);
    for (int k = 0; k < 3; ++k) {
      CHECK(z.col(k).mean() == doctest::Approx(7.0 / 12.0).epsilon(0.01));
      std::vector<double> xs(z.col(k).data(), z.col(k).data() + z.rows());
      CHECK(ks_statistic(xs, [&](double x) { return (1 - beta) * x * x + beta * x; }) < 0.01);
    }
  }
  SUBCASE("inverse CDF endpoints") {
    const double beta = 0.5, a = 1.0 - beta;
    const auto inv = [&](double u) { return (-beta + std::sqrt(beta * beta + 4.0 * a * u)) / (2.0 * a); };
    CHECK(inv(0.0) == 0.0);
    CHECK(inv(1.0) == 1.0);
  }
  SUBCASE("beta outside (0, 1] is rejected") {
    Rng rng(5);
    CHECK_THROWS_AS(sample_public(10, 0.0, 1, rng), ConfigError);
    CHECK_THROWS_AS(sample_public(10, 1.5, 1, rng), ConfigError);
  }
}

TEST_CASE("partition specs") {
  CHECK(PartitionSpec::for_task(TaskSpec::toy1d()).cells.size() == 8);
  CHECK(PartitionSpec::for_task(TaskSpec::toy3d()).cells.size() == 8);
  const auto g = PartitionSpec::grid(2, 3);
  CHECK(g.cells.size() == 9);
  CHECK_NOTHROW(g.validate(2));
  const double p[] = {0.5, 0.9};
  CHECK(g.cells[static_cast<std::size_t>(g.cell_of(p))].contains(p));
  PartitionSpec gap;
  gap.cells = {Box{{0.0}, {0.4}}, Box{{0.5}, {1.0}}};
  CHECK_THROWS_AS(gap.validate(1), ConfigError);
  PartitionSpec overlap;
  overlap.cells = {Box{{0.0}, {0.6}}, Box{{0.4}, {1.0}}};
  CHECK_THROWS_AS(overlap.validate(1), ConfigError);
}

TEST_CASE("partition: multiset preservation, coverage and determinism over 100 seeds") {
  const auto spec = PartitionSpec::for_task(TaskSpec::toy3d());
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const int m = 4 + static_cast<int>(rng.uniform_index(20));
    const PartyDataset pool = uniform_pool(300, 3, rng);
    Rng prng = rng.split(1), again = rng.split(1);
    const auto res = partition_noniid_detailed(pool, m, spec, prng);
    REQUIRE(res.parties.size() == static_cast<std::size_t>(m));
    std::vector<Index> all;
    for (std::size_t k = 0; k < res.parties.size(); ++k) {
      const auto& idx = res.pool_indices[k];
      REQUIRE(res.parties[k].size() == static_cast<Index>(idx.size()));
      for (std::size_t j = 0; j < idx.size(); ++j) {
        // Labels are pool row ids, so each row must come back unchanged.
        CHECK(res.parties[k].y(static_cast<Index>(j)) == static_cast<double>(idx[j]));
        CHECK(res.parties[k].x.row(static_cast<Index>(j)) == pool.x.row(idx[j]));
        const Vector xi = pool.x.row(idx[j]).transpose();
        const int cell = spec.cell_of(std::span<const double>(xi.data(), 3));
        CHECK(res.coverage[static_cast<std::size_t>(cell)][k] == 1);
      }
      all.insert(all.end(), idx.begin(), idx.end());
    }
    std::sort(all.begin(), all.end());
    std::vector<Index> expected(300);
    std::iota(expected.begin(), expected.end(), Index{0});
    CHECK(all == expected);
    for (std::size_t c = 0; c < spec.cells.size(); ++c) {
      CHECK(std::accumulate(res.coverage[c].begin(), res.coverage[c].end(), 0) >= 1);
    }
    for (int k = 0; k < m; ++k) {
      int drawn = 0;
      for (std::size_t c = 0; c < spec.cells.size(); ++c) drawn += res.coverage[c][static_cast<std::size_t>(k)];
      CHECK((drawn == 1 || drawn == 2));
    }
    const auto twice = partition_noniid_detailed(pool, m, spec, again);
    CHECK(twice.pool_indices == res.pool_indices);
    CHECK(twice.base_ratio == res.base_ratio);
  }
}

TEST_CASE("partition with a single cell follows the Dirichlet ratio") {
  // Chi-square of party sizes against n * alpha_k, 4 degrees of freedom, over
  // 200 seeds: the statistic must be calibrated, not just pass once.
  const int m = 5, seeds = 200;
  const Index n = 10000;
  const auto spec = PartitionSpec::grid(1, 1);
  double mean_chi2 = 0.0;
  int rejections = 0;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(1000 + static_cast<std::uint64_t>(s));
    const PartyDataset pool = uniform_pool(n, 1, rng);
    const auto res = partition_noniid_detailed(pool, m, spec, rng);
    REQUIRE(std::accumulate(res.base_ratio.begin(), res.base_ratio.end(), 0.0) ==
            doctest::Approx(1.0).epsilon(1e-12));
    double chi2 = 0.0;
    for (int k = 0; k < m; ++k) {
      const double expected = static_cast<double>(n) * res.base_ratio[static_cast<std::size_t>(k)];
      const double diff = static_cast<double>(res.parties[static_cast<std::size_t>(k)].size()) - expected;
      chi2 += diff * diff / expected;
    }
    mean_chi2 += chi2 / seeds;
    // 99th percentile of chi-square with 4 degrees of freedom.
    rejections += chi2 > 13.277;
  }
  CHECK(mean_chi2 == doctest::Approx(4.0).epsilon(0.15));
  CHECK(rejections <= 8);
}

TEST_CASE("partition per-cell proportions match alpha_k C_ik / sum_j alpha_j C_ij") {
  Rng rng(12);
  const Index n = 20000;
  const PartyDataset pool = uniform_pool(n, 1, rng);
  const auto spec = PartitionSpec::grid(1, 2);
  const auto res = partition_noniid_detailed(pool, 3, spec, rng);
  for (std::size_t c = 0; c < 2; ++c) {
    double denom = 0.0;
    for (std::size_t k = 0; k < 3; ++k) denom += res.base_ratio[k] * res.coverage[c][k];
    Index in_cell = 0;
    std::vector<Index> counts(3, 0);
    for (std::size_t k = 0; k < 3; ++k) {
      for (const Index row : res.pool_indices[k]) {
        const double x = pool.x(row, 0);
        if (spec.cell_of(std::span<const double>(&x, 1)) == static_cast<int>(c)) ++counts[k];
      }
      in_cell += counts[k];
    }
    for (std::size_t k = 0; k < 3; ++k) {
      const double p = res.base_ratio[k] * res.coverage[c][k] / denom;
      const double sd = std::sqrt(p * (1.0 - p) / static_cast<double>(in_cell));
      CHECK(std::abs(static_cast<double>(counts[k]) / static_cast<double>(in_cell) - p) <= 4.0 * sd + 1e-12);
    }
  }
}

TEST_CASE("partition fails loudly when coverage is infeasible") {
  Rng rng(13);
  const PartyDataset pool = uniform_pool(100, 1, rng);
  auto spec = PartitionSpec::for_task(TaskSpec::toy1d());
  spec.max_retries = 50;
  try {
    partition_noniid(pool, 2, spec, rng);
    FAIL("expected a coverage failure");
  } catch (const CoverageError& e) {
    CHECK(e.attempts() == 51);  // first draw plus 50 redraws
  }
  CHECK_THROWS_AS(partition_noniid(pool, 0, spec, rng), ConfigError);
}

TEST_CASE("public input count rule") {
  CHECK(public_count_rule(1000, 1.0, 0.5) == 428);
  CHECK(public_count_rule(10, 1.0, 0.5) == std::llround(std::pow(10.0, 0.4)));
  CHECK(public_count_rule(1000, 1.0, 0.5, 4.0) == std::llround(4.0 * std::pow(1000.0, 0.4) * 27.0));
  CHECK(public_count_rule(4000, 1.0, 0.75) ==
        std::llround(std::pow(4000.0, 1.0 / 2.75) * std::pow(std::log10(4000.0), 3)));
  CHECK_THROWS_AS(public_count_rule(9, 1.0, 0.5), ConfigError);
}

TEST_CASE("dataset CSV round trip") {
  Rng rng(14);
  const auto d = sample_task(TaskSpec::toy3d(), 25, rng);
  std::stringstream ss;
  write_dataset_csv(ss, d);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "x_1,x_2,x_3,y");
  ss.seekg(0);
  const auto back = read_dataset_csv(ss);
  CHECK(back.x == d.x);
  CHECK(back.y == d.y);
  std::stringstream bad("x_1,y\n0.5\n");
  CHECK_THROWS_AS(read_dataset_csv(bad), ConfigError);
}

TEST_CASE("random number generator") {
  Rng a(1), b(1);
  for (int i = 0; i < 10; ++i) CHECK(a() == b());
  CHECK(Rng(1).split(3)() == Rng(1).split(3)());
  CHECK(Rng(1).split(3)() != Rng(1).split(4)());
  CHECK(Rng(1).split({2, 5})() == Rng(1).split({2, 5})());
  Rng r(9);
  double s1 = 0, s2 = 0, g = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s1 += z;
    s2 += z * z;
    g += r.gamma(10.0);
  }
  CHECK(std::abs(s1 / n) < 0.01);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(g / n == doctest::Approx(10.0).epsilon(0.01));
  double gs = 0;
  for (int i = 0; i < n; ++i) gs += r.gamma(0.5);
  CHECK(gs / n == doctest::Approx(0.5).epsilon(0.02));
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(r.uniform_index(7) < 7);
  }
}

}  // TEST_SUITE
