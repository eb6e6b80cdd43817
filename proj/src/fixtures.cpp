#include "conederiv/fixtures.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

#include "conederiv/errors.hpp"

namespace conederiv {

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

Vec scalar(double x) { return Vec::Constant(1, x); }

LinearMap last_coordinate_functional(int m) {
  Matrix row = Matrix::Zero(1, m);
  row(0, m - 1) = 1.0;
  return LinearMap(Subspace::full(m), row);
}

Subspace kernel_of(const LinearMap& k) {
  const Matrix ambient_rows = k.domain().basis() * k.matrix().transpose();  // m x n
  return orthonormalize(ambient_rows).complement();
}

void check_kernel(const LinearMap& k, int m) {
  if (k.domain().ambient_dim() != m || k.domain().dim() != m) {
    throw DimensionMismatch("K must be defined on all of R^m");
  }
  if (k.out_dim() != 1) throw DimensionMismatch("K must map to R");
  if (spectral_norm(k.matrix()) == 0.0) throw std::invalid_argument("K must not be the zero map");
  if (m < 2) throw std::invalid_argument("need m >= 2 so that {0} != ker K != R^m");
}

Vec k_apply(const LinearMap& k, const Vec& x) { return k.matrix() * k.domain().coords(x); }

}  // namespace

Fixture kernel_singular(int m, const LinearMap& k, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("kernel_singular: alpha must be > 0");
  check_kernel(k, m);
  Fixture fx{"kernel_singular_m" + std::to_string(m) + "_a" + num(alpha),
             "directionally but not tangentially differentiable: zero on V, unbounded growth in sharp cones",
             {},
             Vec::Zero(m),
             kernel_of(k),
             {},
             {{"alpha", alpha}, {"m", m}}};
  fx.f.m = m;
  fx.f.n = 1;
  fx.f.eval = [k, alpha](const Vec& x) {
    const double r = x.norm();
    if (r == 0.0) return scalar(0.0);
    return Vec(k_apply(k, x) / std::pow(r, alpha));
  };
  fx.expected.directional = VerdictKind::Differentiable;
  fx.expected.tangential = VerdictKind::Divergent;
  fx.expected.derivative = Matrix::Zero(1, fx.subspace.dim());
  fx.expected.growth_slope = -alpha;
  return fx;
}

Fixture kernel_singular(int m, double alpha) { return kernel_singular(m, last_coordinate_functional(m), alpha); }

ChainPair chain_pair(int m, const LinearMap& k, double beta) {
  if (!(beta >= 2.0)) throw std::invalid_argument("chain_pair: beta must be >= 2");
  check_kernel(k, m);
  const Subspace v = kernel_of(k);
  const std::string suffix = "_m" + std::to_string(m) + "_b" + num(beta);

  ChainPair out{{"chain_f" + suffix, "tangentially differentiable with L = 0; left factor of a failing chain rule",
                 {}, Vec::Zero(m), v, {}, {{"beta", beta}, {"m", m}}},
                {"chain_g_b" + num(beta), "|t|^(1/beta): every function is tangentially differentiable w.r.t. {0}",
                 {}, Vec::Zero(1), Subspace::zero(1), {}, {{"beta", beta}}},
                {"chain_gf" + suffix, "g∘f = |K[x]|/|x|^(1/beta): same form as kernel_singular, not tangential",
                 {}, Vec::Zero(m), v, {}, {{"beta", beta}, {"m", m}}},
                false};

  out.f.f.m = m;
  out.f.f.n = 1;
  out.f.f.eval = [k, beta](const Vec& x) {
    const double r = x.norm();
    if (r == 0.0) return scalar(0.0);
    return scalar(std::pow(std::abs(k_apply(k, x)(0)), beta) / r);
  };
  out.f.expected.directional = VerdictKind::Differentiable;
  out.f.expected.tangential = VerdictKind::Differentiable;
  out.f.expected.derivative = Matrix::Zero(1, v.dim());

  out.g.f.m = 1;
  out.g.f.n = 1;
  out.g.f.eval = [beta](const Vec& t) { return scalar(std::pow(std::abs(t(0)), 1.0 / beta)); };
  out.g.expected.directional = VerdictKind::Differentiable;
  out.g.expected.tangential = VerdictKind::Differentiable;
  out.g.expected.derivative = Matrix::Zero(1, 0);

  out.composite.f = compose(out.g.f, out.f.f);
  out.composite.expected.directional = VerdictKind::Differentiable;
  out.composite.expected.tangential = VerdictKind::Divergent;
  out.composite.expected.derivative = Matrix::Zero(1, v.dim());
  out.composite.expected.growth_slope = -1.0 / beta;
  return out;
}

ChainPair chain_pair(int m, double beta) { return chain_pair(m, last_coordinate_functional(m), beta); }

std::vector<Vec> dense_ray_directions(int count, std::uint64_t seed) {
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) {
    const double turns = static_cast<double>(seed + static_cast<std::uint64_t>(i)) * (std::numbers::phi - 1.0);
    const double angle = 2.0 * std::numbers::pi * (turns - std::floor(turns));
    Vec v(2);
    v << std::cos(angle), std::sin(angle);
    out.push_back(v);
  }
  return out;
}

Fixture dense_ray_indicator(int m, int n_rays, std::uint64_t seed) {
  if (m != 2) throw std::invalid_argument("dense_ray_indicator: only m = 2 is supported");
  if (n_rays < 1) throw std::invalid_argument("dense_ray_indicator: n_rays must be >= 1");
  const std::vector<Vec> rays = dense_ray_directions(n_rays, seed);
  Fixture fx{"dense_ray_n" + std::to_string(n_rays),
             "derivative 0 along every enumerated ray, yet discontinuous at 0",
             {},
             Vec::Zero(2),
             Subspace::full(2),
             {},
             {{"n_rays", n_rays}, {"seed", static_cast<double>(seed)}}};
  fx.f.m = 2;
  fx.f.n = 1;
  fx.f.eval = [rays](const Vec& y) {
    const double r = y.norm();
    double width = 0.25;  // 2^{-(n+2)} for n = 0
    for (const Vec& v : rays) {
      const double dist = std::abs(v(0) * y(1) - v(1) * y(0));
      // Boundary belongs to the cone; allow one rounding step.
      if (dist <= width * r * (1.0 + 1e-12)) return scalar(0.0);
      width *= 0.5;
    }
    return scalar(1.0);
  };
  fx.expected.directional = VerdictKind::Divergent;
  fx.expected.tangential = VerdictKind::Divergent;
  return fx;
}

Fixture lipschitz_homogeneous(int m) {
  if (m != 2) throw std::invalid_argument("lipschitz_homogeneous: only m = 2 is supported");
  Matrix e1 = Matrix::Zero(2, 1);
  e1(0, 0) = 1.0;
  Fixture fx{"lipschitz_homogeneous",
             "Lipschitz control: directional and tangential verdicts coincide",
             {},
             Vec::Zero(2),
             Subspace(e1),
             {},
             {}};
  fx.f.m = 2;
  fx.f.n = 1;
  fx.f.eval = [](const Vec& x) {
    const double r = x.norm();
    if (r == 0.0) return scalar(0.0);
    return scalar(x(0) * x(1) / r);
  };
  fx.expected.directional = VerdictKind::Differentiable;
  fx.expected.tangential = VerdictKind::Differentiable;
  fx.expected.derivative = Matrix::Zero(1, 1);
  return fx;
}

std::vector<std::string> smooth_control_ids() { return {"sin_quad", "polynomial", "exp_mix"}; }

Fixture smooth_control(const std::string& expr_id) {
  Fixture fx{"smooth_" + expr_id, "smooth control with known Jacobian", {}, Vec(), Subspace::zero(1), {}, {}};
  Matrix jac;
  if (expr_id == "sin_quad") {
    fx.base_point = Vec(2);
    fx.base_point << 0.3, -0.2;
    Matrix e1 = Matrix::Zero(2, 1);
    e1(0, 0) = 1.0;
    fx.subspace = Subspace(e1);
    fx.f = {2, 1, [](const Vec& x) { return scalar(std::sin(x(0)) + x(1) * x(1)); }, {}};
    const Vec& a = fx.base_point;
    jac = Matrix(1, 2);
    jac << std::cos(a(0)), 2.0 * a(1);
  } else if (expr_id == "polynomial") {
    fx.base_point = Vec(3);
    fx.base_point << 0.5, 0.5, -0.25;
    Matrix span(3, 2);
    span << 1, 0, 1, 0, 0, 1;
    fx.subspace = orthonormalize(span);
    fx.f = {3, 2,
            [](const Vec& x) {
              Vec y(2);
              y << 0.5 * x(0) * x(0) * x(1) + x(2), x(0) - 0.5 * x(1) * x(2);
              return y;
            },
            {}};
    const Vec& a = fx.base_point;
    jac = Matrix(2, 3);
    jac << a(0) * a(1), 0.5 * a(0) * a(0), 1.0, 1.0, -0.5 * a(2), -0.5 * a(1);
  } else if (expr_id == "exp_mix") {
    fx.base_point = Vec(2);
    fx.base_point << 0.2, 0.1;
    fx.subspace = Subspace::full(2);
    fx.f = {2, 1, [](const Vec& x) { return scalar(std::exp(0.5 * x(0) - x(1)) + std::cos(x(0) * x(1))); }, {}};
    const Vec& a = fx.base_point;
    const double e = std::exp(0.5 * a(0) - a(1));
    const double sn = std::sin(a(0) * a(1));
    jac = Matrix(1, 2);
    jac << 0.5 * e - a(1) * sn, -e - a(0) * sn;
  } else {
    throw UnknownFixture("unknown smooth control: " + expr_id);
  }
  fx.expected.directional = VerdictKind::Differentiable;
  fx.expected.tangential = VerdictKind::Differentiable;
  fx.expected.derivative = jac * fx.subspace.basis();
  return fx;
}

Diffeomorphism shear_diffeo(int m) {
  if (m < 2) throw std::invalid_argument("shear_diffeo: m must be >= 2");
  Diffeomorphism d;
  d.name = "shear";
  d.forward = {m, m, [](const Vec& x) {
                 Vec z = x;
                 z(1) += x(0) * x(0);
                 return z;
               }, {}};
  d.inverse = {m, m, [](const Vec& z) {
                 Vec x = z;
                 x(1) -= z(0) * z(0);
                 return x;
               }, {}};
  d.jacobian = [m](const Vec& x) {
    Matrix j = Matrix::Identity(m, m);
    j(1, 0) = 2.0 * x(0);
    return j;
  };
  return d;
}

Diffeomorphism polynomial_diffeo(int m, std::uint64_t seed) {
  if (m < 2) throw std::invalid_argument("polynomial_diffeo: m must be >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-0.5, 0.5);
  const double c1 = coef(rng), c2 = coef(rng), c3 = coef(rng);
  const double d1 = coef(rng), d2 = coef(rng);
  auto p = [=](double s) { return c1 * s + c2 * s * s + c3 * s * s * s; };
  auto dp = [=](double s) { return c1 + 2 * c2 * s + 3 * c3 * s * s; };
  auto q = [=](double s) { return d1 * s + d2 * s * s; };
  auto dq = [=](double s) { return d1 + 2 * d2 * s; };

  Diffeomorphism d;
  d.name = "polynomial_seed" + std::to_string(seed);
  // psi = S2 ∘ S1 with S1(x) = (x0, x1 + p(x0)), S2(y) = (y0 + q(y1), y1).
  d.forward = {m, m, [=](const Vec& x) {
                 Vec y = x;
                 y(1) += p(x(0));
                 Vec z = y;
                 z(0) += q(y(1));
                 return z;
               }, {}};
  d.inverse = {m, m, [=](const Vec& z) {
                 Vec y = z;
                 y(0) -= q(z(1));
                 Vec x = y;
                 x(1) -= p(y(0));
                 return x;
               }, {}};
  d.jacobian = [=](const Vec& x) {
    Matrix j1 = Matrix::Identity(m, m);
    j1(1, 0) = dp(x(0));
    Matrix j2 = Matrix::Identity(m, m);
    j2(0, 1) = dq(x(1) + p(x(0)));
    return Matrix(j2 * j1);
  };
  return d;
}

TransportedProblem transport(const Fixture& fx, const Diffeomorphism& psi) {
  const Matrix jac = psi.jacobian(fx.base_point);
  const Matrix image = jac * fx.subspace.basis();
  Subspace w = orthonormalize(image);
  BlackBoxFn h = compose(fx.f, psi.inverse);
  const DomainPredicate inner = fx.f.domain;
  const BlackBoxFn inv = psi.inverse;
  h.domain.contains = inner.contains ? std::function<bool(const Vec&)>([inner, inv](const Vec& z) { return inner(inv(z)); })
                                     : std::function<bool(const Vec&)>{};
  Matrix back = w.basis().transpose() * image;
  return {std::move(h), psi.forward(fx.base_point), std::move(w), std::move(back)};
}

std::vector<ChainCase> chain_catalog() {
  std::vector<ChainCase> out;
  for (double beta : {2.0, 3.0}) {
    const ChainPair pair = chain_pair(2, beta);
    out.push_back({"chain_pair_b" + num(beta), "chain rule fails: g is not Lipschitz and L is not injective",
                   pair.f.f, pair.g.f, pair.f.base_point, pair.f.subspace, false, false});
  }
  const ChainPair pair = chain_pair(2, 2.0);
  out.push_back({"chain_abs_b2", "g Lipschitz: chain rule holds", pair.f.f,
                 BlackBoxFn{1, 1, [](const Vec& t) { return Vec(t.cwiseAbs()); }, {}}, pair.f.base_point,
                 pair.f.subspace, true, true});
  out.push_back({"chain_linear_b2", "g linear: chain rule holds", pair.f.f,
                 BlackBoxFn{1, 1, [](const Vec& t) { return Vec(3.0 * t); }, {}}, pair.f.base_point,
                 pair.f.subspace, true, true});

  const Fixture smooth = smooth_control("exp_mix");
  Vec a(2);
  a << 0.1, 0.2;
  Matrix e2 = Matrix::Zero(2, 1);
  e2(1, 0) = 1.0;
  out.push_back({"chain_shear_smooth", "L injective (shear): chain rule holds", shear_diffeo(2).forward, smooth.f, a,
                 Subspace(e2), true, true});
  return out;
}

ChainCase find_chain_case(const std::string& name) {
  for (auto& c : chain_catalog()) {
    if (c.name == name) return c;
  }
  throw UnknownFixture("unknown chain case: " + name);
}

std::vector<Fixture> catalog() {
  std::vector<Fixture> out;
  for (int m : {2, 3}) {
    for (double alpha : {0.25, 0.5, 1.0}) out.push_back(kernel_singular(m, alpha));
  }
  for (double beta : {2.0, 3.0}) {
    ChainPair pair = chain_pair(2, beta);
    out.push_back(std::move(pair.f));
    out.push_back(std::move(pair.composite));
  }
  out.push_back(dense_ray_indicator(2, 40));
  out.push_back(lipschitz_homogeneous());
  for (const auto& id : smooth_control_ids()) out.push_back(smooth_control(id));
  return out;
}

Fixture find_fixture(const std::string& name) {
  for (auto& fx : catalog()) {
    if (fx.name == name) return fx;
  }
  throw UnknownFixture("unknown fixture: " + name);
}

}  // namespace conederiv
