#include <cmath>
#include <numbers>

#include "doctest.h"
#include "test_util.hpp"

#include "dclkr/error.hpp"
#include "dclkr/gram.hpp"
#include "dclkr/kernel.hpp"
#include "dclkr/linalg.hpp"
#include "dclkr/rkhs.hpp"

using namespace dclkr;
using namespace dclkr::test;

namespace {

PointSet column(std::initializer_list<double> xs) {
  PointSet p(static_cast<Index>(xs.size()), 1);
  Index i = 0;
  for (const double x : xs) p(i++, 0) = x;
  return p;
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (const double x : xs) v(i++) = x;
  return v;
}

std::vector<KernelSpec> all_kernels(int dim) {
  std::vector<KernelSpec> ks;
  if (dim == 1) ks.push_back(KernelSpec::min_kernel());
  ks.push_back(KernelSpec::wendland0(dim));
  ks.push_back(KernelSpec::wendland2(dim));
  ks.push_back(KernelSpec::gaussian(0.3, dim));
  return ks;
}

}  // namespace

TEST_SUITE("kernelcore") {

TEST_CASE("kernel values and sup bounds") {
  const double x[] = {0.3}, y[] = {0.7};
  CHECK(KernelSpec::min_kernel()(x, y) == 0.3);
  CHECK(KernelSpec::min_kernel().kappa() == 1.0);
  CHECK(KernelSpec::wendland0(3).kappa() == 1.0);
  CHECK(KernelSpec::wendland2(3).kappa() == doctest::Approx(std::sqrt(3.0)));
  const double o[] = {0.0, 0.0, 0.0}, far[] = {1.0, 0.0, 0.0}, mid[] = {0.5, 0.0, 0.0};
  CHECK(KernelSpec::wendland2(3)(o, o) == 3.0);
  CHECK(KernelSpec::wendland0(3)(o, far) == 0.0);
  CHECK(KernelSpec::wendland0(3)(o, mid) == 0.25);
  CHECK(KernelSpec::gaussian(0.5, 3)(o, o) == 1.0);
  CHECK_THROWS_AS(KernelSpec::gaussian(0.0, 1), ConfigError);
  CHECK_THROWS_AS(KernelSpec::parse("cosine", 1), ConfigError);
  CHECK(KernelSpec::parse("wendland0", 3) == KernelSpec::wendland0(3));
}

TEST_CASE("gram of the min kernel on three points") {
  const Matrix k = gram(KernelSpec::min_kernel(), column({0.25, 0.5, 1.0}));
  Matrix expected(3, 3);
  expected << 0.25, 0.25, 0.25, 0.25, 0.5, 0.5, 0.25, 0.5, 1.0;
  CHECK(k == expected);
}

TEST_CASE("Wendland kernels at the support boundary and the diagonal") {
  PointSet a(2, 3), b(2, 3);
  a << 0, 0, 0, 0.2, 0.2, 0.2;
  b << 1, 0, 0, 0.2, 0.2, 0.2;
  const Matrix k0 = gram(KernelSpec::wendland0(3), a, b);
  CHECK(k0(0, 0) == 0.0);
  CHECK(k0(1, 1) == 1.0);
  const Matrix k2 = gram(KernelSpec::wendland2(3), a, b);
  CHECK(k2(0, 0) == 0.0);
  CHECK(k2(1, 1) == 3.0);
}

TEST_CASE("gram rejects points of the wrong dimension") {
  Rng rng(1);
  CHECK_THROWS_AS(gram(KernelSpec::wendland0(3), random_points(4, 2, rng)), ConfigError);
  CHECK_THROWS_AS(gram(KernelSpec::min_kernel(), random_points(4, 1, rng), random_points(3, 3, rng)), ConfigError);
}

TEST_CASE("gram entries match pointwise evaluation and are symmetric") {
  Rng rng(2);
  for (const int dim : {1, 3}) {
    for (const auto& k : all_kernels(dim)) {
      const PointSet a = random_points(37, dim, rng);
      const PointSet b = random_points(23, dim, rng);
      const Matrix kab = gram(k, a, b);
      for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < b.rows(); ++j) {
          const Vector ai = a.row(i).transpose(), bj = b.row(j).transpose();
          REQUIRE(kab(i, j) == doctest::Approx(k(std::span<const double>(ai.data(), dim),
                                                    std::span<const double>(bj.data(), dim))).epsilon(1e-14));
        }
      }
      const Matrix kaa = gram(k, a);
      CHECK(max_abs(kaa - kaa.transpose()) == 0.0);
    }
  }
}

TEST_CASE("Gram matrices are positive semidefinite") {
  Rng rng(3);
  for (const int dim : {1, 3}) {
    for (const auto& k : all_kernels(dim)) {
      for (int rep = 0; rep < 5; ++rep) {
        const Vector ev = sym_eigenvalues(gram(k, random_points(60, dim, rng)));
        CHECK(ev.minCoeff() >= -1e-10 * ev.maxCoeff());
      }
    }
  }
}

TEST_CASE("SIMD Gram path is bit-identical to the scalar reference") {
  if (simd::detected_isa() != simd::Isa::Avx2) {
    MESSAGE("AVX2 not available; only the scalar path is exercised");
    return;
  }
  Rng rng(4);
  for (const int dim : {1, 2, 3}) {
    for (const auto& k : all_kernels(dim)) {
      // Odd sizes exercise the vector tails.
      for (const Index p : {1, 3, 4, 7, 33}) {
        const PointSet a = random_points(p, dim, rng);
        const PointSet b = random_points(p + 2, dim, rng);
        simd::set_active_isa(simd::Isa::Scalar);
        const Matrix ref = gram(k, a, b);
        const Matrix ref_sym = gram(k, a);
        simd::set_active_isa(simd::Isa::Avx2);
        const Matrix vec_ab = gram(k, a, b);
        const Matrix vec_sym = gram(k, a);
        REQUIRE(ref == vec_ab);
        REQUIRE(ref_sym == vec_sym);
      }
    }
  }
  simd::set_active_isa(simd::detected_isa());
}

TEST_CASE("evaluate") {
  const KernelSpec k = KernelSpec::min_kernel();
  SUBCASE("zero coefficients give the zero vector") {
    const RkhsFunction f(k, column({0.1, 0.9}), Vector::Zero(2));
    CHECK(f.evaluate(column({0.2, 0.5, 1.0})) == Vector::Zero(3));
  }
  SUBCASE("single unit center reproduces the kernel section") {
    const RkhsFunction f(k, column({0.4}), vec({1.0}));
    CHECK(f.evaluate(column({0.1, 0.4, 0.8})) == vec({0.1, 0.4, 0.4}));
  }
  SUBCASE("min kernel, center 0.5 with coefficient 2") {
    const RkhsFunction f(k, column({0.5}), vec({2.0}));
    CHECK(f.evaluate(column({0.25, 1.0})) == vec({0.5, 1.0}));
  }
  SUBCASE("zero function with no centers") {
    CHECK(RkhsFunction::zero(k).evaluate(column({0.3})) == Vector::Zero(1));
  }
  SUBCASE("linear in the coefficients") {
    Rng rng(5);
    const PointSet c = random_points(10, 1, rng), x = random_points(15, 1, rng);
    const Vector a = random_vector(10, rng), b = random_vector(10, rng);
    const Vector lhs = RkhsFunction(k, c, 2.0 * a - 3.0 * b).evaluate(x);
    const Vector rhs = 2.0 * RkhsFunction(k, c, a).evaluate(x) - 3.0 * RkhsFunction(k, c, b).evaluate(x);
    CHECK(max_abs(lhs - rhs) < 1e-12);
  }
  SUBCASE("mismatched coefficient length is rejected") {
    CHECK_THROWS_AS(RkhsFunction(k, column({0.5}), vec({1.0, 2.0})), ConfigError);
  }
}

TEST_CASE("minimum-norm interpolation") {
  SUBCASE("hand-solved 2x2 min-kernel system") {
    const auto f = min_norm_interpolant(KernelSpec::min_kernel(), column({0.5, 1.0}), vec({1.0, 1.0}));
    CHECK(f.coeffs()(0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::abs(f.coeffs()(1)) < 1e-14);
  }
  SUBCASE("identity Gram returns the targets") {
    // Wendland0 centers at mutual distance >= 1 are orthonormal sections.
    PointSet z(2, 3);
    z << 0, 0, 0, 1, 1, 1;
    const Vector t = vec({0.7, -1.3});
    CHECK(max_abs(min_norm_interpolant(KernelSpec::wendland0(3), z, t).coeffs() - t) == 0.0);
  }
  SUBCASE("zero targets give the zero function") {
    Rng rng(6);
    const auto f = min_norm_interpolant(KernelSpec::min_kernel(), random_points(5, 1, rng), Vector::Zero(5));
    CHECK(f.coeffs() == Vector::Zero(5));
  }
  SUBCASE("random instances interpolate when well conditioned") {
    Rng rng(7);
    int checked = 0;
    for (int rep = 0; rep < 40; ++rep) {
      const int dim = rep % 2 == 0 ? 1 : 3;
      const KernelSpec k = dim == 1 ? KernelSpec::min_kernel() : KernelSpec::wendland2(3);
      const Index n0 = 1 + static_cast<Index>(rng.uniform_index(50));
      const PointSet z = random_points(n0, dim, rng);
      const Vector ev = sym_eigenvalues(gram(k, z));
      if (ev.minCoeff() <= 0.0 || ev.maxCoeff() / ev.minCoeff() > 1e10) continue;
      const Vector t = random_vector(n0, rng);
      const auto f = min_norm_interpolant(k, z, t);
      CHECK(max_abs(f.evaluate(z) - t) <= 1e-8);
      ++checked;
    }
    CHECK(checked >= 20);
  }
  SUBCASE("duplicate points are handled by the pseudo-inverse") {
    const auto f = min_norm_interpolant(KernelSpec::min_kernel(), column({0.5, 0.5, 1.0}), vec({1.0, 1.0, 2.0}));
    CHECK(f.coeffs()(0) == doctest::Approx(f.coeffs()(1)));
    CHECK(max_abs(f.evaluate(column({0.5, 1.0})) - vec({1.0, 2.0})) < 1e-8);
  }
}

TEST_CASE("pseudo-inverse agrees between the Cholesky and eigen paths") {
  Rng rng(8);
  const PointSet z = random_points(40, 3, rng);
  const Matrix k = gram(KernelSpec::wendland2(3), z);
  const PsdPseudoInverse fast(k), slow(k, PsdPseudoInverse::Method::Eigen);
  CHECK(fast.used_cholesky());
  CHECK_FALSE(slow.used_cholesky());
  CHECK(slow.full_rank());
  const Vector b = random_vector(40, rng);
  const Vector x1 = fast.solve(b), x2 = slow.solve(b);
  CHECK((x1 - x2).norm() <= 1e-8 * x2.norm());

  // Rank-deficient input falls back to the truncated eigendecomposition.
  Matrix low = Matrix::Zero(3, 3);
  low(0, 0) = 2.0;
  const PsdPseudoInverse p(low);
  CHECK_FALSE(p.used_cholesky());
  CHECK(p.rank() == 1);
  CHECK(p.solve(Vector(Vector::Ones(3))) == vec({0.5, 0.0, 0.0}));
}

TEST_CASE("Nystrom projection") {
  const KernelSpec k = KernelSpec::min_kernel();
  Rng rng(9);
  const PointSet z = random_points(12, 1, rng);
  const SpanBasis basis(k, z);
  SUBCASE("idempotent on span-Z functions") {
    const RkhsFunction f(k, z, random_vector(12, rng));
    const auto pf = nystrom_project(f, basis);
    CHECK(max_abs(pf.coeffs() - f.coeffs()) <= 1e-8);
    CHECK(max_abs(nystrom_project(pf, basis).coeffs() - pf.coeffs()) <= 1e-8);
  }
  SUBCASE("zero function projects to zero") {
    CHECK(nystrom_project(RkhsFunction::zero(k), basis).coeffs() == Vector::Zero(12));
  }
  SUBCASE("off-Z centers: values on Z preserved") {
    const RkhsFunction f(k, random_points(20, 1, rng), random_vector(20, rng));
    CHECK(max_abs(nystrom_project(f, basis).evaluate(z) - f.evaluate(z)) <= 1e-8);
  }
  SUBCASE("linear") {
    const RkhsFunction f(k, random_points(8, 1, rng), random_vector(8, rng));
    const RkhsFunction g(k, random_points(6, 1, rng), random_vector(6, rng));
    PointSet centers(14, 1);
    centers << f.centers(), g.centers();
    Vector coeffs(14);
    coeffs << 1.5 * f.coeffs(), -0.25 * g.coeffs();
    const RkhsFunction comb(k, centers, coeffs);
    const PointSet probe = random_points(30, 1, rng);
    const Vector lhs = nystrom_project(comb, basis).evaluate(probe);
    const Vector rhs =
        1.5 * nystrom_project(f, basis).evaluate(probe) - 0.25 * nystrom_project(g, basis).evaluate(probe);
    CHECK(max_abs(lhs - rhs) <= 1e-8);
  }
  SUBCASE("projection residual is orthogonal to the span") {
    // <f - P f, k_z> = f(z) - (P f)(z) = 0 is the defining property; check the
    // RKHS norm Pythagoras |f|^2 = |Pf|^2 + |f - Pf|^2 as well.
    const PointSet c = random_points(9, 1, rng);
    const RkhsFunction f(k, c, random_vector(9, rng));
    const auto pf = nystrom_project(f, basis);
    PointSet all(21, 1);
    all << c, z;
    Vector diff(21);
    diff << f.coeffs(), -pf.coeffs();
    const Matrix kall = gram(k, all);
    const double norm_f = f.coeffs().dot(gram(k, c) * f.coeffs());
    const double norm_pf = pf.coeffs().dot(basis.gram() * pf.coeffs());
    const double norm_r = diff.dot(kall * diff);
    CHECK(norm_f == doctest::Approx(norm_pf + norm_r).epsilon(1e-8));
  }
  SUBCASE("kernel mismatch is a configuration error") {
    const RkhsFunction f(KernelSpec::gaussian(0.2, 1), z, Vector::Ones(12));
    CHECK_THROWS_AS(nystrom_project(f, basis), ConfigError);
  }
}

TEST_CASE("min-kernel eigendecay on a uniform grid") {
  const Index n = 2000;
  PointSet grid(n, 1);
  for (Index i = 0; i < n; ++i) grid(i, 0) = static_cast<double>(i + 1) / static_cast<double>(n);
  Vector ev = sym_eigenvalues(gram(KernelSpec::min_kernel(), grid)) / static_cast<double>(n);
  std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
  for (int i = 1; i <= 10; ++i) {
    const double w = (2.0 * i - 1.0) * std::numbers::pi / 2.0;
    const double analytic = 1.0 / (w * w);
    CHECK(std::abs(ev(i - 1) - analytic) <= 0.05 * analytic);
  }
}

}  // TEST_SUITE
