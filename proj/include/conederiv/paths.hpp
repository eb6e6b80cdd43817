#pragma once

#include <vector>

#include "conederiv/estimators.hpp"
#include "conederiv/linalg.hpp"

namespace conederiv {

/// C^1 path through knots (t_n, x_n) with gamma(0) = a and gamma'(0) = v.
///
/// On (t_{n+1}, t_n] the path is the cubic blend
///   x_{n+1} (1 - p(s)) + x_n p(s) + (t_n - t_{n+1}) q(s) v,   s = (t - t_{n+1}) / (t_n - t_{n+1}),
/// with p(s) = 3s^2 - 2s^3 and q(s) = s - p(s). Below the last knot t_N one more blend runs down to
/// the ray point a + t_{N+1} v at t_{N+1} = ratio_bound * t_N; below that gamma(t) = a + t v.
class PiecewisePath {
 public:
  PiecewisePath(Vec base, std::vector<double> knots_t, std::vector<Vec> knots_x, Vec velocity);

  const Vec& base() const noexcept { return base_; }
  const std::vector<double>& knots_t() const noexcept { return knots_t_; }
  const std::vector<Vec>& knots_x() const noexcept { return knots_x_; }
  const Vec& velocity() const noexcept { return velocity_; }
  /// max t_{n+1}/t_n over the stored knots.
  double ratio_bound() const noexcept { return ratio_bound_; }
  /// |(x_N - a)/t_N - v|, recorded but not judged.
  double last_deviation() const noexcept { return last_deviation_; }
  double t_max() const noexcept { return knots_t_.front(); }
  Eigen::Index dim() const noexcept { return base_.size(); }

  /// gamma(t) for 0 <= t <= t_0.
  Vec eval(double t) const;
  /// gamma'(t) for 0 <= t <= t_0.
  Vec deriv(double t) const;
  /// Linear continuation a + t v for t < 0, eval otherwise.
  Vec eval_extended(double t) const;
  Vec deriv_extended(double t) const;

 private:
  struct Segment {
    double t_hi, t_lo;
    const Vec* x_hi;
    const Vec* x_lo;
  };
  /// Segment containing t in (t_lo, t_hi]; false when t is on the linear tail.
  bool find_segment(double t, Segment& seg) const;

  Vec base_;
  std::vector<double> knots_t_;
  std::vector<Vec> knots_x_;
  Vec velocity_;
  double ratio_bound_;
  double last_deviation_;
  double tail_t_;
  Vec tail_x_;
};

double hermite_p(double s) noexcept;
double hermite_q(double s) noexcept;
double hermite_dp(double s) noexcept;
double hermite_dq(double s) noexcept;

/// Throws RatioViolation when t is not strictly decreasing and positive, LengthMismatch on size errors.
PiecewisePath build_path(const Vec& a, const std::vector<double>& knots_t, const std::vector<Vec>& knots_x,
                         const Vec& v);

Vec interp_eval(const PiecewisePath& p, double t);
Vec interp_deriv(const PiecewisePath& p, double t);

struct PullbackResult {
  std::vector<CurvePoint> residuals;  ///< max |(f(gamma(t)) - f(a))/t - L[v]| per level
  std::vector<CurvePoint> quotients;  ///< max |(f(gamma(t)) - f(a))/t| per level
  Verdict verdict;
};

/// Differentiability of f∘gamma at 0 with derivative L[gamma'(0)].
PullbackResult pullback_test(const BlackBoxFn& f, const PiecewisePath& p, const LinearMap& l,
                             const ScaleSchedule& sched, const EstimatorOptions& opts = {});

struct Straightening {
  BlackBoxFn forward;  ///< (y_1, y'') -> gamma(y_1) + (0, y'')
  BlackBoxFn inverse;  ///< bisection on the first coordinate, valid on the box below
  double y1_min, y1_max;
  double z1_min, z1_max;
};

/// Throws FirstCoordinateDegenerate when |v_1| < 1e-8.
Straightening straightening_map(const PiecewisePath& p);

}  // namespace conederiv
