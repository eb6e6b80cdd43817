#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "conederiv/linalg.hpp"
#include "conederiv/sampling.hpp"

namespace conederiv {

/// f: A ⊆ R^m -> R^n. `eval` must be pure; it may be called from several threads.
struct BlackBoxFn {
  int m = 0;
  int n = 0;
  std::function<Vec(const Vec&)> eval;
  DomainPredicate domain;

  Vec operator()(const Vec& x) const { return eval(x); }
};

/// g ∘ f, with domain restricted to the domain of f.
BlackBoxFn compose(const BlackBoxFn& g, const BlackBoxFn& f);

enum class VerdictKind { Differentiable, Divergent, Inconclusive };

struct Verdict {
  VerdictKind kind = VerdictKind::Inconclusive;
  std::string reason;

  bool differentiable() const noexcept { return kind == VerdictKind::Differentiable; }
};

const char* to_string(VerdictKind kind) noexcept;
VerdictKind verdict_from_string(const std::string& name);

enum class GrowthAperture {
  Fixed,    ///< growth measured on the theta0 cone at every level
  Coupled,  ///< growth measured on the theta_k cone
};

/// Tolerances and sampling density shared by every decision procedure.
struct EstimatorOptions {
  double tol_abs = 1e-3;
  double slack = 1.1;
  double refit_drift = 0.05;
  double divergence_factor = 2.0;
  double cap = 1e6;
  double noise_floor = 1e-12;
  int count_per_dim = 4;
  int n_apertures = 4;
  int n_radii = 3;
  double min_survivor_fraction = 0.25;
  GrowthAperture growth_aperture = GrowthAperture::Fixed;
  double linearity_tol = 1e-3;
  double match_tol = 1e-5;
  std::uint64_t seed = 0;
  int threads = 1;

  CloudShape shape() const { return {n_apertures, n_radii, min_survivor_fraction}; }
};

struct CurvePoint {
  double delta;
  double theta;
  double value;
};

struct DerivativeEstimate {
  LinearMap L;
  std::vector<CurvePoint> residuals;
  std::vector<CurvePoint> growth;
  Verdict verdict;
};

// Decision rules, exposed so other modules (path pullback) apply the same criteria.

/// Last value <= tol_abs and nonincreasing (within slack) over the finest ceil(K/2) levels.
bool residual_rule(const std::vector<CurvePoint>& curve, const EstimatorOptions& opts, std::string* why = nullptr);
/// A strictly increasing run of >= 3 levels growing by >= divergence_factor, or any value above cap.
bool divergence_rule(const std::vector<CurvePoint>& curve, const EstimatorOptions& opts, std::string* why = nullptr);

/// Evaluates f at every point, in parallel when opts.threads != 1; results keep input order.
std::vector<Vec> evaluate_all(const BlackBoxFn& f, std::span<const Vec> points, int threads);

/// Tangential derivative at a with respect to V, sampled on sharp cones around V + a.
DerivativeEstimate estimate_tangential(const BlackBoxFn& f, const Vec& a, const Subspace& v,
                                       const ScaleSchedule& sched, const EstimatorOptions& opts = {});

/// Directional derivative: same pipeline restricted to the slice V + a.
DerivativeEstimate estimate_directional(const BlackBoxFn& f, const Vec& a, const Subspace& v,
                                        const ScaleSchedule& sched, const EstimatorOptions& opts = {});

struct ConeGrowth {
  std::vector<CurvePoint> growth;
  /// Log-log slope over the finest ceil(K/2) levels; empty when some g_k is 0.
  std::optional<double> slope;
};

ConeGrowth cone_growth(const BlackBoxFn& f, const Vec& a, const Subspace& v, const ScaleSchedule& sched,
                       const EstimatorOptions& opts = {});

struct DirectionEntry {
  Vec direction;
  std::optional<DerivativeEstimate> estimate;
  std::string error;
};

struct DirectionProfile {
  std::vector<DirectionEntry> entries;
  /// Least-squares linear map through the per-direction derivatives (over V-coordinates).
  LinearMap fit;
  double linearity_residual;

  bool all_differentiable() const;
};

/// For each unit v in `dirs`, estimates the one-sided derivative along the ray through v
/// using sharp cones around that ray, then checks the values fit a single linear map.
DirectionProfile per_direction_profile(const BlackBoxFn& f, const Vec& a, const Subspace& v,
                                       std::span<const Vec> dirs, const ScaleSchedule& sched,
                                       const EstimatorOptions& opts = {});

struct TwoPointResult {
  std::vector<CurvePoint> ratios;
  bool bounded;
  std::string reason;
};

/// Per level, the largest difference quotient |f(x)-f(y)|/|x-y| over pairs in the sharp cone.
TwoPointResult two_point_cone_lipschitz(const BlackBoxFn& f, const Vec& a, const Subspace& v,
                                        const ScaleSchedule& sched, const EstimatorOptions& opts = {});

struct ChainLevel {
  double delta;
  double theta;
  double kappa;
  std::size_t samples;
  std::size_t survivors;
  bool vacuous;
  double c;
  /// Max |f(x)-f(a)-L[v]|/|x-a| among survivors.
  double f_residual;
  std::optional<Vec> witness;
};

struct ChainResult {
  bool holds;
  std::vector<ChainLevel> levels;
  std::string reason;
};

/// Checks that |g(f(x)) - g(f(a))| / |x-a| -> 0 over cone samples where |f(x)-f(a)| <= kappa_k |x-a|.
ChainResult chain_condition(const BlackBoxFn& f, const BlackBoxFn& g, const Vec& a, const Subspace& v,
                            const LinearMap& l, const ScaleSchedule& sched, const EstimatorOptions& opts = {});

struct ComposeReport {
  DerivativeEstimate f_estimate;
  Subspace image;
  DerivativeEstimate g_estimate;
  DerivativeEstimate composite;
  Matrix kl;
  double deviation;
  bool match;
  ChainResult chain;
  double min_gain;
  bool injective;
  TwoPointResult g_lipschitz;

  /// g∘f tangentially differentiable with derivative K∘L.
  bool composite_ok() const { return composite.verdict.differentiable() && match; }
  bool consistent() const { return chain.holds == composite_ok(); }
};

ComposeReport compose_and_check(const BlackBoxFn& f, const BlackBoxFn& g, const Vec& a, const Subspace& v,
                                const ScaleSchedule& sched, const EstimatorOptions& opts = {});

}  // namespace conederiv
