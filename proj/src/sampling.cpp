#include "conederiv/sampling.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "conederiv/errors.hpp"

namespace conederiv {

namespace {

constexpr double kGoldenFraction = std::numbers::phi - 1.0;
constexpr double kSeedShift = std::numbers::sqrt2 - 1.0;
constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

double frac(double x) { return x - std::floor(x); }

double radical_inverse(std::uint64_t index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
    index /= static_cast<std::uint64_t>(base);
    f /= base;
  }
  return result;
}

void push_unique(std::vector<Vec>& out, const Vec& u) {
  for (const Vec& w : out) {
    if ((w - u).norm() < 1e-9) return;
  }
  out.push_back(u);
}

}  // namespace

void ScaleSchedule::validate() const {
  if (!(delta0 > 0.0) || !std::isfinite(delta0)) throw std::invalid_argument("schedule: delta0 must be > 0");
  if (!(theta0 > 0.0 && theta0 <= 1.0)) throw std::invalid_argument("schedule: theta0 must lie in (0, 1]");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("schedule: rho must lie in (0, 1)");
  if (levels < 3) throw std::invalid_argument("schedule: levels must be >= 3");
}

std::vector<ScaleLevel> schedule_scales(const ScaleSchedule& s) {
  s.validate();
  std::vector<ScaleLevel> out;
  out.reserve(static_cast<std::size_t>(s.levels));
  double delta = s.delta0;
  double theta = s.theta0;
  for (int k = 0; k < s.levels; ++k) {
    out.push_back({delta, theta});
    delta *= s.rho;
    theta *= s.rho;
  }
  return out;
}

DomainPredicate DomainPredicate::everywhere() { return DomainPredicate{}; }

std::vector<Vec> direction_mesh(const Subspace& v, int count_per_dim, std::uint64_t seed) {
  if (count_per_dim < 1) throw std::invalid_argument("direction_mesh: count_per_dim must be >= 1");
  const Eigen::Index k = v.dim();
  std::vector<Vec> coords;
  if (k == 0) return {};

  for (Eigen::Index i = 0; i < k; ++i) {
    Vec e = Vec::Zero(k);
    e(i) = 1.0;
    push_unique(coords, e);
    push_unique(coords, -e);
  }

  if (k == 2) {
    // Half-integer golden-angle offsets stay off the integer golden-angle rays.
    const double shift = frac(static_cast<double>(seed) * kSeedShift);
    for (int j = 0; j < count_per_dim; ++j) {
      const double angle = 2.0 * std::numbers::pi * frac((j + 0.5) * kGoldenFraction + shift);
      Vec u(2);
      u << std::cos(angle), std::sin(angle);
      push_unique(coords, u);
      push_unique(coords, -u);
    }
  } else if (k > 2) {
    if (k > static_cast<Eigen::Index>(std::size(kPrimes))) {
      throw std::invalid_argument("direction_mesh: subspace dimension too large");
    }
    const auto n_points = static_cast<std::uint64_t>(std::pow(count_per_dim, static_cast<double>(k - 1)));
    std::uint64_t index = 1 + seed * 1009;
    std::uint64_t produced = 0;
    while (produced < n_points) {
      Vec u(k);
      for (Eigen::Index i = 0; i < k; ++i) u(i) = 2.0 * radical_inverse(index, kPrimes[i]) - 1.0;
      ++index;
      const double norm = u.norm();
      if (norm < 0.1) continue;
      u /= norm;
      push_unique(coords, u);
      push_unique(coords, -u);
      ++produced;
    }
  }

  std::vector<Vec> out;
  out.reserve(coords.size());
  for (const Vec& c : coords) out.push_back(v.basis() * c);
  return out;
}

std::vector<ConeSample> cone_cloud_from(const Vec& a, const Subspace& v, std::span<const Vec> centres,
                                        double delta, double theta, const CloudShape& shape,
                                        const DomainPredicate& domain, std::uint64_t seed) {
  if (!(delta > 0.0)) throw std::invalid_argument("cone_cloud: delta must be > 0");
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("cone_cloud: theta must lie in [0, 1]");
  if (a.size() != v.ambient_dim()) throw DimensionMismatch("cone_cloud: base point dimension");
  if (shape.n_apertures < 1 || shape.n_radii < 1) throw std::invalid_argument("cone_cloud: empty shape");

  const Subspace perp = v.complement();
  const std::vector<Vec> normals = perp.dim() > 0 ? direction_mesh(perp, 2, seed) : std::vector<Vec>{};

  std::vector<double> radii;
  for (int i = 0; i < shape.n_radii; ++i) {
    const double t = shape.n_radii == 1 ? 0.0 : static_cast<double>(i) / (shape.n_radii - 1);
    radii.push_back(delta * (1.0 - 0.5 * t));
  }
  std::vector<double> apertures{0.0};
  if (theta > 0.0 && !normals.empty()) {
    for (int i = 1; i <= shape.n_apertures; ++i) {
      apertures.push_back(i == shape.n_apertures ? theta : theta * i / shape.n_apertures);
    }
  }

  std::vector<ConeSample> out;
  std::size_t generated = 0;
  for (const Vec& u : centres) {
    for (double r : radii) {
      for (double s : apertures) {
        const double c = std::sqrt(1.0 - s * s);
        const std::size_t n_normals = s == 0.0 ? 1 : normals.size();
        for (std::size_t j = 0; j < n_normals; ++j) {
          Vec offset = s == 0.0 ? Vec(r * u) : Vec(r * (c * u + s * normals[j]));
          Vec x = a + offset;
          const std::size_t index = generated++;
          if (!domain(x)) continue;
          const Vec diff = x - a;
          const double radius = diff.norm();
          if (!(radius > 0.0)) continue;
          Vec vc = project(v, diff);
          const double ratio = (diff - vc).norm() / radius;
          out.push_back(ConeSample{std::move(x), radius, std::move(vc), ratio, index});
        }
      }
    }
  }

  const auto required = static_cast<std::size_t>(
      std::ceil(shape.min_survivor_fraction * static_cast<double>(generated)));
  if (generated == 0 || out.size() < std::max<std::size_t>(required, 1)) {
    throw InsufficientSamples(out.size(), std::max<std::size_t>(required, 1));
  }
  return out;
}

std::vector<ConeSample> cone_cloud(const Vec& a, const Subspace& v, double delta, double theta,
                                   int n_dirs, int n_apertures, const DomainPredicate& domain,
                                   std::uint64_t seed) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("cone_cloud: theta must lie in (0, 1]");
  const std::vector<Vec> centres = direction_mesh(v, n_dirs, seed);
  CloudShape shape;
  shape.n_apertures = n_apertures;
  return cone_cloud_from(a, v, centres, delta, theta, shape, domain, seed);
}

}  // namespace conederiv
