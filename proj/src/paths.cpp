#include "conederiv/paths.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "conederiv/errors.hpp"

namespace conederiv {

double hermite_p(double s) noexcept { return s * s * (3.0 - 2.0 * s); }
double hermite_q(double s) noexcept { return s - hermite_p(s); }
double hermite_dp(double s) noexcept { return 6.0 * s * (1.0 - s); }
double hermite_dq(double s) noexcept { return 1.0 - hermite_dp(s); }

PiecewisePath::PiecewisePath(Vec base, std::vector<double> knots_t, std::vector<Vec> knots_x, Vec velocity)
    : base_(std::move(base)),
      knots_t_(std::move(knots_t)),
      knots_x_(std::move(knots_x)),
      velocity_(std::move(velocity)),
      ratio_bound_(0.0),
      last_deviation_(0.0),
      tail_t_(0.0) {
  if (knots_t_.size() != knots_x_.size()) throw LengthMismatch("path: knots_t and knots_x differ in length");
  if (knots_t_.size() < 2) throw LengthMismatch("path: at least two knots required");
  if (velocity_.size() != base_.size()) throw LengthMismatch("path: velocity dimension differs from base");
  for (const Vec& x : knots_x_) {
    if (x.size() != base_.size()) throw LengthMismatch("path: knot dimension differs from base");
  }
  for (std::size_t n = 0; n < knots_t_.size(); ++n) {
    if (!(knots_t_[n] > 0.0) || !std::isfinite(knots_t_[n])) {
      throw RatioViolation("path: knot time " + std::to_string(n) + " is not positive");
    }
    if (n > 0) {
      const double ratio = knots_t_[n] / knots_t_[n - 1];
      if (!(ratio < 1.0)) {
        throw RatioViolation("path: t_" + std::to_string(n) + " >= t_" + std::to_string(n - 1));
      }
      ratio_bound_ = std::max(ratio_bound_, ratio);
    }
  }
  last_deviation_ = ((knots_x_.back() - base_) / knots_t_.back() - velocity_).norm();
  tail_t_ = ratio_bound_ * knots_t_.back();
  tail_x_ = base_ + tail_t_ * velocity_;
}

bool PiecewisePath::find_segment(double t, Segment& seg) const {
  if (t <= tail_t_) return false;
  if (t <= knots_t_.back()) {
    seg = {knots_t_.back(), tail_t_, &knots_x_.back(), &tail_x_};
    return true;
  }
  // First knot index with knots_t_[i] < t; the segment is (knots_t_[i], knots_t_[i-1]].
  const auto it = std::upper_bound(knots_t_.begin(), knots_t_.end(), t, [](double value, double knot) {
    return knot < value;
  });
  const auto i = static_cast<std::size_t>(it - knots_t_.begin());
  seg = {knots_t_[i - 1], knots_t_[i], &knots_x_[i - 1], &knots_x_[i]};
  return true;
}

Vec PiecewisePath::eval(double t) const {
  if (!(t >= 0.0 && t <= t_max())) throw OutOfRange("path: t outside [0, t_0]");
  Segment seg{};
  if (!find_segment(t, seg)) return base_ + t * velocity_;
  const double width = seg.t_hi - seg.t_lo;
  const double s = (t - seg.t_lo) / width;
  const double p = hermite_p(s);
  return *seg.x_lo * (1.0 - p) + *seg.x_hi * p + (width * hermite_q(s)) * velocity_;
}

Vec PiecewisePath::deriv(double t) const {
  if (!(t >= 0.0 && t <= t_max())) throw OutOfRange("path: t outside [0, t_0]");
  Segment seg{};
  if (!find_segment(t, seg)) return velocity_;
  const double width = seg.t_hi - seg.t_lo;
  const double s = (t - seg.t_lo) / width;
  return (*seg.x_hi - *seg.x_lo) * (hermite_dp(s) / width) + hermite_dq(s) * velocity_;
}

Vec PiecewisePath::eval_extended(double t) const { return t < 0.0 ? Vec(base_ + t * velocity_) : eval(t); }
Vec PiecewisePath::deriv_extended(double t) const { return t < 0.0 ? velocity_ : deriv(t); }

PiecewisePath build_path(const Vec& a, const std::vector<double>& knots_t, const std::vector<Vec>& knots_x,
                         const Vec& v) {
  return PiecewisePath(a, knots_t, knots_x, v);
}

Vec interp_eval(const PiecewisePath& p, double t) { return p.eval(t); }
Vec interp_deriv(const PiecewisePath& p, double t) { return p.deriv(t); }

PullbackResult pullback_test(const BlackBoxFn& f, const PiecewisePath& p, const LinearMap& l,
                             const ScaleSchedule& sched, const EstimatorOptions& opts) {
  if (p.dim() != f.m) throw DimensionMismatch("pullback_test: path dimension differs from f");
  const Vec fa = f(p.base());
  const Vec target = l.apply(project(l.domain(), p.velocity()));

  PullbackResult out;
  for (const auto& [delta, theta] : schedule_scales(sched)) {
    const double hi = std::min(delta, p.t_max());
    const double lo = std::min(delta * 0.5, hi);
    std::vector<double> ts{hi, 0.5 * (hi + lo), lo};
    const auto& knots = p.knots_t();
    for (std::size_t n = 0; n < knots.size(); ++n) {
      if (knots[n] >= lo && knots[n] <= hi) ts.push_back(knots[n]);
      if (n + 1 < knots.size()) {
        const double mid = 0.5 * (knots[n] + knots[n + 1]);
        if (mid >= lo && mid <= hi) ts.push_back(mid);
      }
    }
    std::vector<Vec> points;
    for (double t : ts) points.push_back(p.eval(t));
    const auto values = evaluate_all(f, points, opts.threads);
    double residual = 0.0;
    double quotient = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const Vec q = (values[i] - fa) / ts[i];
      const double r = (q - target).norm();
      residual = std::isnan(r) ? std::numeric_limits<double>::infinity() : std::max(residual, r);
      const double g = q.norm();
      quotient = std::isnan(g) ? std::numeric_limits<double>::infinity() : std::max(quotient, g);
    }
    out.residuals.push_back({delta, theta, residual});
    out.quotients.push_back({delta, theta, quotient});
  }
  std::string why;
  if (residual_rule(out.residuals, opts, &why)) {
    out.verdict = {VerdictKind::Differentiable, "difference quotient converges to L[v]"};
  } else if (std::string div; divergence_rule(out.quotients, opts, &div)) {
    out.verdict = {VerdictKind::Divergent, div};
  } else {
    out.verdict = {VerdictKind::Inconclusive, why};
  }
  return out;
}

Straightening straightening_map(const PiecewisePath& p) {
  const Vec& v = p.velocity();
  if (std::abs(v(0)) < 1e-8) throw FirstCoordinateDegenerate("straightening_map: first coordinate of gamma'(0) is ~0");
  const double sign = v(0) > 0 ? 1.0 : -1.0;

  // Largest T such that gamma_1' keeps the sign of v_1 on [0, T] (sampled per segment).
  std::vector<double> grid{0.0};
  const auto& knots = p.knots_t();
  for (std::size_t n = knots.size(); n-- > 0;) {
    const double lo = n + 1 < knots.size() ? knots[n + 1] : 0.0;
    for (int j = 1; j <= 32; ++j) grid.push_back(lo + (knots[n] - lo) * j / 32.0);
  }
  double extent = 0.0;
  for (double t : grid) {
    if (sign * p.deriv(t)(0) <= 0.0) break;
    extent = t;
  }

  auto path = std::make_shared<PiecewisePath>(p);
  const auto m = static_cast<int>(p.dim());
  Straightening out;
  out.y1_min = -extent;
  out.y1_max = extent;
  const double za = path->eval_extended(-extent)(0);
  const double zb = path->eval_extended(extent)(0);
  out.z1_min = std::min(za, zb);
  out.z1_max = std::max(za, zb);

  out.forward.m = m;
  out.forward.n = m;
  out.forward.eval = [path, extent](const Vec& y) {
    if (std::abs(y(0)) > extent) throw OutOfRange("straightening: y_1 outside the monotone box");
    Vec z = path->eval_extended(y(0));
    z.tail(z.size() - 1) += y.tail(y.size() - 1);
    return z;
  };
  out.inverse.m = m;
  out.inverse.n = m;
  out.inverse.eval = [path, extent, sign, lo_z = out.z1_min, hi_z = out.z1_max](const Vec& z) {
    if (z(0) < lo_z || z(0) > hi_z) throw OutOfRange("straightening inverse: z_1 outside the reported box");
    double lo = -extent;
    double hi = extent;
    for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (sign * (path->eval_extended(mid)(0) - z(0)) < 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double y1 = 0.5 * (lo + hi);
    Vec y = z - path->eval_extended(y1);
    y(0) = y1;
    return y;
  };
  return out;
}

}  // namespace conederiv
