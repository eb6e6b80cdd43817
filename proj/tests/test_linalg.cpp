#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "conederiv/errors.hpp"
#include "conederiv/linalg.hpp"

using namespace conederiv;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Subspace span1(const Vec& u) { return orthonormalize(std::vector<Vec>{u}, u.size()); }

// Largest singular value of a 2x2 (or 1x2 padded) matrix from the eigenvalues of A^T A.
double sigma_max_2x2(double a, double b, double c, double d) {
  const double t = a * a + b * b + c * c + d * d;
  const double det = a * d - b * c;
  return std::sqrt((t + std::sqrt(std::max(0.0, t * t - 4 * det * det))) / 2);
}

}  // namespace

TEST_CASE("orthonormalize examples") {
  const Subspace e1 = orthonormalize(std::vector<Vec>{vec({1, 0})}, 2);
  CHECK(e1.dim() == 1);
  CHECK(e1.basis()(0, 0) == doctest::Approx(1.0));
  CHECK(e1.basis()(1, 0) == doctest::Approx(0.0));

  const Subspace diag = orthonormalize(std::vector<Vec>{vec({1, 1}), vec({2, 2})}, 2);
  CHECK(diag.dim() == 1);
  CHECK(diag.basis()(0, 0) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(diag.basis()(1, 0) == doctest::Approx(1 / std::sqrt(2.0)));

  const Subspace zero = orthonormalize(std::vector<Vec>{}, 2);
  CHECK(zero.dim() == 0);
  CHECK(zero.ambient_dim() == 2);
}

TEST_CASE("orthonormalize yields orthonormal bases for random spans") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 6);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = dim(rng);
    const int count = std::uniform_int_distribution<int>(0, m + 2)(rng);
    std::vector<Vec> vs;
    for (int i = 0; i < count; ++i) {
      Vec u(m);
      for (int r = 0; r < m; ++r) u(r) = gauss(rng);
      // Every third vector is a combination of earlier ones.
      if (i >= 2 && i % 3 == 2) u = 0.5 * vs[0] - 2.0 * vs[1];
      vs.push_back(u);
    }
    const Subspace v = orthonormalize(vs, m);
    CHECK(v.dim() <= m);
    const Matrix gram = v.basis().transpose() * v.basis();
    CHECK((gram - Matrix::Identity(v.dim(), v.dim())).norm() < 1e-12);

    Matrix a(m, count);
    for (int i = 0; i < count; ++i) a.col(i) = vs[static_cast<std::size_t>(i)];
    const auto rank = count == 0 ? 0 : Eigen::FullPivLU<Matrix>(a).rank();
    CHECK(v.dim() == rank);
    for (const Vec& u : vs) CHECK(dist_to_subspace(v, u) < 1e-10 * std::max(1.0, u.norm()));
  }
}

TEST_CASE("Subspace rejects non-orthonormal bases") {
  Matrix b(2, 1);
  b << 1, 1;
  CHECK_THROWS_AS((void)Subspace(b), std::invalid_argument);
}

TEST_CASE("complement is orthogonal and fills the space") {
  const Subspace v = span1(vec({1, 2, 2}));
  const Subspace w = v.complement();
  CHECK(w.dim() == 2);
  CHECK((v.basis().transpose() * w.basis()).norm() < 1e-12);
  CHECK(Subspace::full(3).complement().dim() == 0);
  CHECK(Subspace::zero(3).complement().dim() == 3);
}

TEST_CASE("project examples") {
  const Subspace e1 = span1(vec({1, 0}));
  CHECK((project(e1, vec({3, 4})) - vec({3, 0})).norm() < 1e-15);
  CHECK(project(Subspace::zero(2), vec({3, 4})).norm() == 0.0);
  const Subspace d = span1(vec({1, 1}));
  CHECK((project(d, vec({1, 0})) - vec({0.5, 0.5})).norm() < 1e-15);
}

TEST_CASE("dist_to_subspace examples") {
  CHECK(dist_to_subspace(span1(vec({1, 0})), vec({3, 4})) == doctest::Approx(4.0));
  CHECK(dist_to_subspace(Subspace::full(2), vec({-7, 0.3})) == doctest::Approx(0.0));
  CHECK(dist_to_subspace(span1(vec({1, 1})), vec({1, 0})) == doctest::Approx(1 / std::sqrt(2.0)));
}

TEST_CASE("projection is idempotent and splits the norm") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + trial % 4;
    std::vector<Vec> vs;
    for (int i = 0; i < 1 + trial % m; ++i) {
      Vec u(m);
      for (int r = 0; r < m; ++r) u(r) = gauss(rng);
      vs.push_back(u);
    }
    const Subspace v = orthonormalize(vs, m);
    Vec u(m);
    for (int r = 0; r < m; ++r) u(r) = gauss(rng);
    const Vec p = project(v, u);
    CHECK((project(v, p) - p).norm() < 1e-12);
    const double d = dist_to_subspace(v, u);
    CHECK(std::abs(d * d + p.squaredNorm() - u.squaredNorm()) < 1e-10);
  }
}

TEST_CASE("operator_norm and min_gain examples") {
  Matrix diag(2, 2);
  diag << 2, 0, 0, 3;
  const LinearMap d(Subspace::full(2), diag);
  CHECK(operator_norm(d) == doctest::Approx(3.0));
  CHECK(min_gain(d) == doctest::Approx(2.0));

  const LinearMap z = LinearMap::zero(Subspace::full(2), 3);
  CHECK(operator_norm(z) == 0.0);
  CHECK(min_gain(z) == 0.0);

  const LinearMap id(Subspace::full(2), Matrix::Identity(2, 2));
  CHECK(min_gain(id) == doctest::Approx(1.0));

  Matrix row(1, 2);
  row << 3, 4;
  const double oracle = sigma_max_2x2(3, 4, 0, 0);
  CHECK(oracle == doctest::Approx(5.0));
  CHECK(operator_norm(LinearMap(Subspace::full(2), row)) == doctest::Approx(oracle).epsilon(1e-14));
}

TEST_CASE("operator_norm matches the closed-form 2x2 singular value") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix a(2, 2);
    a << u(rng), u(rng), u(rng), u(rng);
    const LinearMap l(Subspace::full(2), a);
    CHECK(operator_norm(l) == doctest::Approx(sigma_max_2x2(a(0, 0), a(0, 1), a(1, 0), a(1, 1))).epsilon(1e-12));
    CHECK(operator_norm(l) >= min_gain(l));
    CHECK(min_gain(l) >= 0.0);
  }
}

TEST_CASE("LinearMap acts on V-coordinates") {
  const Subspace d = span1(vec({1, 1}));
  Matrix m(1, 1);
  m << 2.0;
  const LinearMap l(d, m);
  CHECK(l.apply(vec({1, 1}))(0) == doctest::Approx(2 * std::sqrt(2.0)));
  CHECK_THROWS(LinearMap(d, Matrix::Zero(1, 2)));
}
