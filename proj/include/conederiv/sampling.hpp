#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "conederiv/linalg.hpp"

namespace conederiv {

/// Geometric radii delta_k = delta0 * rho^k and apertures theta_k = theta0 * rho^k.
struct ScaleSchedule {
  double delta0 = 0.1;
  double theta0 = 0.05;
  double rho = 0.5;
  int levels = 8;

  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;
};

struct ScaleLevel {
  double delta;
  double theta;
};

std::vector<ScaleLevel> schedule_scales(const ScaleSchedule& s);

struct DomainPredicate {
  std::function<bool(const Vec&)> contains;

  static DomainPredicate everywhere();
  bool operator()(const Vec& x) const { return !contains || contains(x); }
};

struct ConeSample {
  Vec point;
  double radius;
  Vec v_component;
  double aperture_ratio;
  /// Position in the generation order (before filtering).
  std::size_t index;
};

/// Unit vectors covering V ∩ ∂B[0,1]: the ± basis directions plus a
/// low-discrepancy set (golden angle when dim V = 2, Halton otherwise).
/// The set is closed under u -> -u.
std::vector<Vec> direction_mesh(const Subspace& v, int count_per_dim, std::uint64_t seed);

struct CloudShape {
  int n_apertures = 4;
  int n_radii = 3;
  double min_survivor_fraction = 0.25;
};

/// Points x = a + r(u sqrt(1-s^2) + w s) with u on the mesh of V, w unit in V-perp,
/// r in [delta/2, delta], s in {0, theta/n_apertures, ..., theta}.
/// Samples outside `domain` are dropped.
std::vector<ConeSample> cone_cloud(const Vec& a, const Subspace& v, double delta, double theta,
                                   int n_dirs, int n_apertures, const DomainPredicate& domain,
                                   std::uint64_t seed);

/// Same construction with explicit centre directions (used for one-sided ray cones)
/// and explicit shape parameters.
std::vector<ConeSample> cone_cloud_from(const Vec& a, const Subspace& v, std::span<const Vec> centres,
                                        double delta, double theta, const CloudShape& shape,
                                        const DomainPredicate& domain, std::uint64_t seed);

}  // namespace conederiv
