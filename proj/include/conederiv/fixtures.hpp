#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "conederiv/estimators.hpp"
#include "conederiv/linalg.hpp"

namespace conederiv {

/// Ground truth a fixture carries for the estimators.
struct Expectation {
  std::optional<VerdictKind> directional;
  std::optional<VerdictKind> tangential;
  /// Expected derivative over V-coordinates (n x k), when one exists.
  std::optional<Matrix> derivative;
  /// Fixed-aperture cone growth exponent.
  std::optional<double> growth_slope;
};

struct Fixture {
  std::string name;
  std::string role;
  BlackBoxFn f;
  Vec base_point;
  Subspace subspace;
  Expectation expected;
  std::map<std::string, double> params;
};

/// f(x) = K[x] / |x|^alpha, f(0) = 0; V = ker K.
Fixture kernel_singular(int m, const LinearMap& k, double alpha);
/// Same with K[x] = x_m.
Fixture kernel_singular(int m, double alpha);

struct ChainPair {
  Fixture f;          ///< |K[x]|^beta / |x|
  Fixture g;          ///< |t|^{1/beta} at 0 w.r.t. {0}
  Fixture composite;  ///< g∘f, of the kernel_singular form with alpha = 1/beta
  bool chain_holds;
};

ChainPair chain_pair(int m, const LinearMap& k, double beta);
ChainPair chain_pair(int m, double beta);

/// Unit directions v_n at angle n * 2pi * (phi - 1) mod 2pi, n = seed .. seed + count - 1.
std::vector<Vec> dense_ray_directions(int count, std::uint64_t seed = 0);

/// f = 0 on the cones dist(y, <v_n>) <= 2^{-(n+2)} |y| for n < n_rays, 1 elsewhere.
Fixture dense_ray_indicator(int m, int n_rays, std::uint64_t seed = 0);

/// f(x) = x_1 x_2 / |x|, f(0) = 0; base 0, V = <e1>.
Fixture lipschitz_homogeneous(int m = 2);

/// Built-in smooth controls: "sin_quad", "polynomial", "exp_mix".
Fixture smooth_control(const std::string& expr_id);
std::vector<std::string> smooth_control_ids();

/// A diffeomorphism of R^m with closed-form inverse and Jacobian.
struct Diffeomorphism {
  std::string name;
  BlackBoxFn forward;
  BlackBoxFn inverse;
  std::function<Matrix(const Vec&)> jacobian;
};

/// psi(x) = (x_1, x_2 + x_1^2, x_3, ...).
Diffeomorphism shear_diffeo(int m = 2);
/// Composition of two random polynomial shears in the first two coordinates.
Diffeomorphism polynomial_diffeo(int m, std::uint64_t seed);

/// Transports (f, a, V) to (f∘psi^{-1}, psi(a), Dpsi(a)[V]).
struct TransportedProblem {
  BlackBoxFn f;
  Vec base_point;
  Subspace subspace;
  /// Maps coordinates over the new subspace back to coordinates over V:
  /// L_f = L_h * back, with back = W^T Dpsi(a) V.
  Matrix back;
};
TransportedProblem transport(const Fixture& fx, const Diffeomorphism& psi);

/// A pair (f, g) with the expected outcome of the chain condition and of the composite.
struct ChainCase {
  std::string name;
  std::string role;
  BlackBoxFn f;
  BlackBoxFn g;
  Vec base_point;
  Subspace subspace;
  bool expect_holds;
  bool expect_composite;
};

std::vector<ChainCase> chain_catalog();
ChainCase find_chain_case(const std::string& name);

/// Every single-function fixture, in catalog order.
std::vector<Fixture> catalog();
/// Throws UnknownFixture.
Fixture find_fixture(const std::string& name);

}  // namespace conederiv
