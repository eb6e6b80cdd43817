#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "conederiv/errors.hpp"
#include "conederiv/fixtures.hpp"
#include "conederiv/json_io.hpp"
#include "conederiv/paths.hpp"

using namespace conederiv;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// t_n = 2^-n, x_n = (2^-n, 4^-n), n = 0 .. count-1.
PiecewisePath parabola_path(int count) {
  std::vector<double> t;
  std::vector<Vec> x;
  for (int n = 0; n < count; ++n) {
    const double s = std::ldexp(1.0, -n);
    t.push_back(s);
    x.push_back(vec({s, s * s}));
  }
  return build_path(vec({0, 0}), t, x, vec({1, 0}));
}

struct RandomKnots {
  Vec a, v;
  std::vector<double> t;
  std::vector<Vec> x;
};

// Admissible data: ratios in [0.3, 0.8], x_n = a + t_n v + t_n^2 w_n with |w_n| <= 1.
// With `one_curve` every w_n is the same, so the knots lie on a smooth curve.
RandomKnots random_knots(std::mt19937_64& rng, int m, int count, bool one_curve = false) {
  std::uniform_real_distribution<double> u(-1, 1), ratio(0.3, 0.8);
  RandomKnots k;
  k.a = Vec(m);
  k.v = Vec(m);
  for (int i = 0; i < m; ++i) {
    k.a(i) = u(rng);
    k.v(i) = u(rng);
  }
  auto draw = [&] {
    Vec w(m);
    for (int i = 0; i < m; ++i) w(i) = u(rng);
    return Vec(w / std::max(1.0, w.norm()));
  };
  const Vec w0 = draw();
  double t = 0.5 + 0.5 * std::abs(u(rng));
  for (int n = 0; n < count; ++n) {
    const Vec w = one_curve ? w0 : draw();
    k.t.push_back(t);
    k.x.push_back(k.a + t * k.v + t * t * w);
    t *= ratio(rng);
  }
  return k;
}

// Closed-form blend on [t_lo, t_hi]: s = (t - t_lo) / w, p = 3s^2 - 2s^3, q = s - p.
Vec blend_derivative(const Vec& x_lo, const Vec& x_hi, double t_lo, double t_hi, const Vec& v, double t) {
  const double w = t_hi - t_lo;
  const double s = (t - t_lo) / w;
  const double dp = 6 * s - 6 * s * s;
  const double dq = 1 - dp;
  return (x_hi - x_lo) * dp / w + dq * v;
}

}  // namespace

TEST_CASE("Hermite blends") {
  CHECK(hermite_p(0) == 0.0);
  CHECK(hermite_p(1) == 1.0);
  CHECK(hermite_q(0) == 0.0);
  CHECK(hermite_q(1) == 0.0);
  CHECK(hermite_dp(0) == 0.0);
  CHECK(hermite_dp(1) == 0.0);
  CHECK(hermite_dq(0) == 1.0);
  CHECK(hermite_dq(1) == 1.0);
  CHECK(hermite_p(0.5) == 0.5);
  CHECK(hermite_dp(0.5) == 1.5);
  CHECK(hermite_dq(0.5) == -0.5);
}

TEST_CASE("build_path examples") {
  const PiecewisePath p = parabola_path(12);
  CHECK(p.ratio_bound() == doctest::Approx(0.5));

  const PiecewisePath q = build_path(vec({0, 0}), {1, 0.9, 0.85}, {vec({1, 0}), vec({0.9, 0}), vec({0.85, 0})},
                                     vec({1, 0}));
  CHECK(q.ratio_bound() == doctest::Approx(0.85 / 0.9));

  CHECK_THROWS_AS(build_path(vec({0, 0}), {1, 1}, {vec({1, 0}), vec({1, 0})}, vec({1, 0})), RatioViolation);
  CHECK_THROWS_AS(build_path(vec({0, 0}), {1, 2}, {vec({1, 0}), vec({2, 0})}, vec({1, 0})), RatioViolation);
  CHECK_THROWS_AS(build_path(vec({0, 0}), {1, -0.5}, {vec({1, 0}), vec({0, 0})}, vec({1, 0})), RatioViolation);
  CHECK_THROWS_AS(build_path(vec({0, 0}), {1, 0.5}, {vec({1, 0})}, vec({1, 0})), LengthMismatch);
  CHECK_THROWS_AS(build_path(vec({0, 0}), {1, 0.5}, {vec({1, 0}), vec({1, 0, 0})}, vec({1, 0})), LengthMismatch);
}

TEST_CASE("interp_eval and interp_deriv on the parabola data") {
  const PiecewisePath p = parabola_path(12);
  // s = 0.5 on [0.5, 1]: p = 0.5, q = 0, so gamma = x_1 + 0.5 (x_0 - x_1).
  const Vec x0 = vec({1, 1}), x1 = vec({0.5, 0.25});
  const Vec hand = x1 + 0.5 * (x0 - x1);
  CHECK((interp_eval(p, 0.75) - hand).norm() < 1e-15);
  CHECK((hand - vec({0.75, 0.625})).norm() < 1e-15);

  const Vec oracle = blend_derivative(x1, x0, 0.5, 1.0, vec({1, 0}), 0.75);
  CHECK((interp_deriv(p, 0.75) - oracle).norm() < 1e-14);
  CHECK((oracle - vec({1.0, 2.25})).norm() < 1e-14);

  CHECK_THROWS_AS(interp_eval(p, 1.5), OutOfRange);
  CHECK_THROWS_AS(interp_eval(p, -0.1), OutOfRange);
}

TEST_CASE("knots, velocity and C1 continuity on random admissible data") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const auto k = random_knots(rng, 2 + trial % 3, 6 + trial % 10);
    const PiecewisePath p = build_path(k.a, k.t, k.x, k.v);
    CHECK(p.ratio_bound() <= 0.8);
    for (std::size_t n = 0; n < k.t.size(); ++n) {
      const double t = k.t[n];
      CHECK((interp_eval(p, t) - k.x[n]).norm() <= 1e-13 * std::max(1.0, k.x[n].norm()));
      CHECK(interp_deriv(p, t) == k.v);
      const double h = 1e-9;
      const Vec left = (interp_eval(p, t) - interp_eval(p, t - h)) / h;
      CHECK((left - k.v).norm() < 1e-5);
      if (n > 0) {
        const Vec right = (interp_eval(p, t + h) - interp_eval(p, t)) / h;
        CHECK((right - k.v).norm() < 1e-5);
      }
    }
    std::uniform_real_distribution<double> where(k.t.back(), k.t.front());
    for (int i = 0; i < 100; ++i) {
      const double t = where(rng);
      const double h = 1e-9;
      if (t + h > k.t.front()) continue;
      const Vec central = (interp_eval(p, t + h) - interp_eval(p, t - h)) / (2 * h);
      CHECK((central - interp_deriv(p, t)).norm() < 1e-6);
    }
  }
}

TEST_CASE("difference quotients at zero approach v") {
  const PiecewisePath p = parabola_path(25);
  double previous = INFINITY;
  for (double h : {1e-3, 1e-4, 1e-5}) {
    const double err = ((interp_eval(p, h) - p.base()) / h - p.velocity()).norm();
    CHECK(err < previous);
    previous = err;
  }
  CHECK(previous < 1e-4);
}

TEST_CASE("colinear knots reproduce the ray") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec a = vec({u(rng), u(rng), u(rng)});
    const Vec v = vec({u(rng), u(rng), u(rng)});
    std::vector<double> t;
    std::vector<Vec> x;
    for (double s = 1.0; s > 1e-4; s *= 0.6) {
      t.push_back(s);
      x.push_back(a + s * v);
    }
    const PiecewisePath p = build_path(a, t, x, v);
    for (int i = 0; i <= 200; ++i) {
      const double s = i / 200.0;
      CHECK((interp_eval(p, s) - (a + s * v)).norm() < 1e-14);
      CHECK((interp_deriv(p, s) - v).norm() < 1e-12);
    }
  }
}

TEST_CASE("pullback of a linear map along any path") {
  std::mt19937_64 rng(8);
  Matrix m(2, 3);
  m << 1, -2, 0.5, 0, 3, 1;
  const BlackBoxFn f{3, 2, [m](const Vec& x) -> Vec { return m * x; }, {}};
  for (int trial = 0; trial < 5; ++trial) {
    auto k = random_knots(rng, 3, 40, true);
    const PiecewisePath p = build_path(k.a, k.t, k.x, k.v);
    const LinearMap l(Subspace::full(3), m);
    // The residual is |M (gamma(t) - a - t v)| / t ~ |M w| t, so it needs radii well below tol_abs.
    const auto r = pullback_test(f, p, l, ScaleSchedule{0.1, 0.05, 0.5, 12});
    CHECK(r.verdict.kind == VerdictKind::Differentiable);
  }
}

TEST_CASE("pullback along a slow curve on the kernel example diverges") {
  const Fixture fx = kernel_singular(2, 1.0);
  std::vector<double> t;
  std::vector<Vec> x;
  for (int n = 1; n <= 24; ++n) {
    const double tn = std::ldexp(1.0, -n);
    const double sn = 1 / std::sqrt(static_cast<double>(n));
    t.push_back(tn);
    x.push_back(vec({tn, tn * sn}));
  }
  const PiecewisePath p = build_path(vec({0, 0}), t, x, vec({1, 0}));
  const auto r = pullback_test(fx.f, p, LinearMap::zero(fx.subspace, 1), ScaleSchedule{});
  CHECK(r.verdict.kind == VerdictKind::Divergent);
  for (const auto& q : r.quotients) {
    for (std::size_t n = 0; n < t.size(); ++n) {
      if (t[n] < q.delta / 2 || t[n] > q.delta) continue;
      const double s = 1 / std::sqrt(static_cast<double>(n + 1));
      // f(x_n) / t_n = s_n / (sqrt(1 + s_n^2) t_n).
      const double oracle = s / (std::sqrt(1 + s * s) * t[n]);
      CHECK(std::abs(fx.f(interp_eval(p, t[n]))(0)) / t[n] == doctest::Approx(oracle).epsilon(1e-12));
      CHECK(q.value >= oracle * (1 - 1e-12));
    }
  }
}

TEST_CASE("pullback of a smooth control along its ray") {
  const Fixture fx = smooth_control("sin_quad");
  const Vec v = fx.subspace.basis().col(0);
  std::vector<double> t;
  std::vector<Vec> x;
  for (double s = 0.1; s > 1e-5; s *= 0.5) {
    t.push_back(s);
    x.push_back(fx.base_point + s * v);
  }
  const PiecewisePath p = build_path(fx.base_point, t, x, v);
  const LinearMap l(fx.subspace, *fx.expected.derivative);
  const auto r = pullback_test(fx.f, p, l, ScaleSchedule{});
  CHECK(r.verdict.kind == VerdictKind::Differentiable);
  // d/dt [sin(a1 + t) + a2^2] at 0 = cos(a1).
  CHECK(r.quotients.back().value == doctest::Approx(std::cos(fx.base_point(0))).epsilon(1e-3));
}

TEST_CASE("straightening map") {
  std::vector<double> t;
  std::vector<Vec> x;
  for (double s = 1.0; s > 1e-4; s *= 0.5) {
    t.push_back(s);
    x.push_back(vec({s, 0}));
  }
  const auto line = straightening_map(build_path(vec({0, 0}), t, x, vec({1, 0})));
  const Vec y = vec({0.3, -0.2});
  CHECK((line.forward(y) - y).norm() < 1e-15);
  CHECK((line.inverse(y) - y).norm() < 1e-12);

  const PiecewisePath p = parabola_path(20);
  const auto st = straightening_map(p);
  CHECK(st.y1_max > 0.5);
  for (std::size_t n = 0; n < p.knots_t().size(); ++n) {
    const double tn = p.knots_t()[n];
    if (tn > st.y1_max) continue;
    // First coordinate is colinear, so psi(t_n, y2) = (t_n, t_n^2 + y2).
    const Vec z = st.forward(vec({tn, 0.1}));
    CHECK(z(0) == doctest::Approx(tn));
    CHECK(z(1) == doctest::Approx(tn * tn + 0.1).epsilon(1e-13));
    const Vec back = st.inverse(vec({tn, 0.7}));
    CHECK(back(1) == doctest::Approx(0.7 - tn * tn).epsilon(1e-10));
  }

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u1(st.y1_min, st.y1_max), u2(-1, 1);
  for (int i = 0; i < 200; ++i) {
    const Vec y = vec({u1(rng), u2(rng)});
    CHECK((st.inverse(st.forward(y)) - y).norm() < 1e-8);
  }

  const PiecewisePath vertical = build_path(vec({0, 0}), {1, 0.5}, {vec({0, 1}), vec({0, 0.5})}, vec({0, 1}));
  CHECK_THROWS_AS(straightening_map(vertical), FirstCoordinateDegenerate);
}

TEST_CASE("path JSON round trip") {
  const PiecewisePath p = parabola_path(6);
  const Json j = path_to_json(p);
  CHECK(j.contains("base"));
  CHECK(j.contains("knots_t"));
  CHECK(j.contains("knots_x"));
  CHECK(j.contains("velocity"));
  const PiecewisePath q = path_from_json(j);
  CHECK(path_to_json(q).dump() == j.dump());
  CHECK((interp_eval(q, 0.3) - interp_eval(p, 0.3)).norm() == 0.0);
}
