#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"

#include "conederiv/errors.hpp"
#include "conederiv/fixtures.hpp"

using namespace conederiv;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Matrix fd_jacobian(const BlackBoxFn& f, const Vec& x, double h = 1e-6) {
  Matrix j(f.n, f.m);
  for (int i = 0; i < f.m; ++i) {
    Vec e = Vec::Zero(f.m);
    e(i) = h;
    j.col(i) = (f(x + e) - f(x - e)) / (2 * h);
  }
  return j;
}

}  // namespace

TEST_CASE("kernel_singular values") {
  const Fixture fx = kernel_singular(2, 0.5);
  const Vec x = vec({0.01, 0.0001});
  const double oracle = 0.0001 / std::pow(std::hypot(0.01, 0.0001), 0.5);
  CHECK(fx.f(x)(0) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(fx.f(x)(0) == doctest::Approx(9.9997e-4).epsilon(1e-4));
  CHECK(fx.f(vec({0, 0}))(0) == 0.0);
  CHECK(fx.f(vec({-0.3, 0}))(0) == 0.0);

  const Fixture f3 = kernel_singular(3, 1.0);
  CHECK(f3.subspace.dim() == 2);
  CHECK(f3.f(vec({0.2, -0.7, 0}))(0) == 0.0);
  CHECK(f3.f(vec({0, 0, 0}))(0) == 0.0);
}

TEST_CASE("kernel_singular is positively homogeneous of degree 1 - alpha") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1, 1), lam(0.01, 10);
  for (int m : {2, 3}) {
    for (double alpha : {0.25, 0.5, 1.0}) {
      const Fixture fx = kernel_singular(m, alpha);
      for (int i = 0; i < 50; ++i) {
        Vec x(m);
        for (int r = 0; r < m; ++r) x(r) = u(rng);
        const double l = lam(rng);
        const double expect = std::pow(l, 1 - alpha) * fx.f(x)(0);
        CHECK(std::abs(fx.f(l * x)(0) - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
      }
    }
  }
}

TEST_CASE("chain_pair closed forms") {
  const ChainPair pair = chain_pair(2, 2.0);
  CHECK_FALSE(pair.chain_holds);
  for (double theta : {0.1, 0.01}) {
    for (double t : {0.1, 0.001}) {
      const double expect = theta * theta * t * t / (t * std::sqrt(1 + theta * theta));
      CHECK(pair.f.f(vec({t, theta * t}))(0) == doctest::Approx(expect).epsilon(1e-13));
    }
  }
  CHECK(pair.g.f(vec({0.04}))(0) == doctest::Approx(0.2).epsilon(1e-15));
  for (const Vec& x : {vec({0.3, 0.2}), vec({-0.1, 0.05}), vec({0.001, -0.002})}) {
    CHECK(pair.composite.f(x)(0) == doctest::Approx(std::abs(x(1)) / std::sqrt(x.norm())).epsilon(1e-13));
  }
}

TEST_CASE("dense_ray_indicator values") {
  const Fixture fx = dense_ray_indicator(2, 40);
  const auto rays = dense_ray_directions(40);
  for (double r : {1.0, 1e-3, 1e-9}) CHECK(fx.f(r * rays[0])(0) == 0.0);

  // dist(x, <v_3>) = 2^-5 |x| exactly: on the boundary of cone 3.
  const Vec v3 = rays[3];
  const Vec n3 = vec({-v3(1), v3(0)});
  const double s = std::ldexp(1.0, -5);
  const Vec edge = 0.4 * (std::sqrt(1 - s * s) * v3 + s * n3);
  CHECK(fx.f(edge)(0) == 0.0);

  // Every annulus 2^-j <= |x| <= 2^-j+1 contains a point where f = 1.
  for (int j = 1; j <= 20; ++j) {
    bool found = false;
    const double r = 1.5 * std::ldexp(1.0, -j);
    for (int i = 0; i < 720 && !found; ++i) {
      const double phi = 2 * std::numbers::pi * i / 720;
      found = fx.f(vec({r * std::cos(phi), r * std::sin(phi)}))(0) == 1.0;
    }
    CHECK(found);
  }
}

TEST_CASE("dense ray directions follow the golden angle") {
  const auto rays = dense_ray_directions(10);
  const double step = 2 * std::numbers::pi * (std::numbers::phi - 1);
  for (int n = 0; n < 10; ++n) {
    const double a = n * step;
    CHECK(rays[static_cast<std::size_t>(n)](0) == doctest::Approx(std::cos(a)));
    CHECK(rays[static_cast<std::size_t>(n)](1) == doctest::Approx(std::sin(a)));
  }
}

TEST_CASE("lipschitz_homogeneous values and gradient bound") {
  const Fixture fx = lipschitz_homogeneous();
  CHECK(fx.f(vec({3, 4}))(0) == doctest::Approx(2.4));
  CHECK(fx.f(vec({0.7, 0}))(0) == 0.0);
  CHECK(fx.f(vec({0, 0}))(0) == 0.0);
  // Degree-1 homogeneous, so the Lipschitz constant is the largest gradient on the unit circle.
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double phi = 2 * std::numbers::pi * (i + 0.5) / 10000;
    worst = std::max(worst, fd_jacobian(fx.f, vec({std::cos(phi), std::sin(phi)})).norm());
  }
  CHECK(worst <= 2.0);
}

TEST_CASE("smooth controls carry the Jacobian restricted to V") {
  for (const auto& id : smooth_control_ids()) {
    CAPTURE(id);
    const Fixture fx = smooth_control(id);
    REQUIRE(fx.expected.derivative);
    const Matrix oracle = fd_jacobian(fx.f, fx.base_point) * fx.subspace.basis();
    CHECK((*fx.expected.derivative - oracle).norm() < 1e-8);
  }
  CHECK_THROWS_AS(smooth_control("nope"), UnknownFixture);
}

TEST_CASE("shear diffeomorphism") {
  const Diffeomorphism psi = shear_diffeo();
  CHECK((psi.forward(vec({2, 3})) - vec({2, 7})).norm() == 0.0);
  CHECK((psi.inverse(vec({2, 7})) - vec({2, 3})).norm() == 0.0);
  CHECK((psi.jacobian(vec({0, 0})) - Matrix::Identity(2, 2)).norm() == 0.0);
  const Fixture fx = kernel_singular(2, 1.0);
  const TransportedProblem tp = transport(fx, psi);
  CHECK(dist_to_subspace(tp.subspace, vec({1, 0})) < 1e-15);
}

TEST_CASE("polynomial diffeomorphisms invert and differentiate correctly") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (int m : {2, 3}) {
      const Diffeomorphism psi = polynomial_diffeo(m, seed);
      for (int i = 0; i < 20; ++i) {
        Vec x(m);
        for (int r = 0; r < m; ++r) x(r) = u(rng);
        CHECK((psi.inverse(psi.forward(x)) - x).norm() < 1e-12);
        CHECK((psi.jacobian(x) - fd_jacobian(psi.forward, x)).norm() < 1e-7);
      }
    }
  }
}

TEST_CASE("transported problems map derivatives back") {
  const Fixture fx = smooth_control("polynomial");
  const Diffeomorphism psi = polynomial_diffeo(3, 4);
  const TransportedProblem tp = transport(fx, psi);
  CHECK((tp.f(tp.base_point) - fx.f(fx.base_point)).norm() < 1e-12);
  // D(f o psi^-1)(psi(a)) restricted to W, pulled back to V-coordinates, equals Df(a) V.
  const Matrix lh = fd_jacobian(tp.f, tp.base_point) * tp.subspace.basis();
  CHECK((lh * tp.back - *fx.expected.derivative).norm() < 1e-7);
}

TEST_CASE("catalog names are unique and resolvable") {
  std::set<std::string> names;
  for (const Fixture& fx : catalog()) {
    CHECK(names.insert(fx.name).second);
    CHECK(find_fixture(fx.name).name == fx.name);
    CHECK(fx.f(fx.base_point).size() == fx.f.n);
    CHECK(fx.subspace.ambient_dim() == fx.f.m);
  }
  CHECK(names.count("kernel_singular_m2_a0.5") == 1);
  CHECK(names.count("dense_ray_n40") == 1);
  CHECK_THROWS_AS(find_fixture("missing"), UnknownFixture);
  for (const ChainCase& c : chain_catalog()) CHECK(find_chain_case(c.name).name == c.name);
}
