#include "conederiv/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "conederiv/errors.hpp"

namespace conederiv {

namespace {

std::size_t half_window(std::size_t levels) { return (levels + 1) / 2; }

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

/// One level of samples with f evaluated.
struct LevelSamples {
  double delta;
  double theta;
  std::vector<ConeSample> samples;
  std::vector<Vec> df;  // f(x) - f(a)
};

LevelSamples sample_level(const BlackBoxFn& f, const Vec& a, const Vec& fa, const Subspace& v,
                          std::span<const Vec> centres, double delta, double theta,
                          const EstimatorOptions& opts) {
  LevelSamples out{delta, theta, cone_cloud_from(a, v, centres, delta, theta, opts.shape(), f.domain, opts.seed), {}};
  std::vector<Vec> points;
  points.reserve(out.samples.size());
  for (const auto& s : out.samples) points.push_back(s.point);
  out.df = evaluate_all(f, points, opts.threads);
  for (Vec& d : out.df) d -= fa;
  return out;
}

/// Least squares of f(x)-f(a) against V-coordinates of v, each row weighted by 1/|x-a|.
Matrix fit_map(const Subspace& v, std::span<const LevelSamples* const> levels, Eigen::Index n) {
  const Eigen::Index k = v.dim();
  Eigen::Index rows = 0;
  for (const auto* lvl : levels) rows += static_cast<Eigen::Index>(lvl->samples.size());
  Matrix design(rows, k);
  Matrix rhs(rows, n);
  Eigen::Index r = 0;
  for (const auto* lvl : levels) {
    for (std::size_t i = 0; i < lvl->samples.size(); ++i, ++r) {
      const double w = 1.0 / lvl->samples[i].radius;
      design.row(r) = (v.coords(lvl->samples[i].v_component) * w).transpose();
      rhs.row(r) = (lvl->df[i] * w).transpose();
    }
  }
  const Matrix solution = design.completeOrthogonalDecomposition().solve(rhs);  // k x n
  return solution.transpose();
}

double worst_residual(const Subspace& v, const LevelSamples& lvl, const Matrix& l) {
  double worst = 0.0;
  for (std::size_t i = 0; i < lvl.samples.size(); ++i) {
    const Vec pred = l * v.coords(lvl.samples[i].v_component);
    const double ratio = (lvl.df[i] - pred).norm() / lvl.samples[i].radius;
    if (std::isnan(ratio)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, ratio);
  }
  return worst;
}

double worst_growth(const LevelSamples& lvl) {
  double worst = 0.0;
  for (std::size_t i = 0; i < lvl.samples.size(); ++i) {
    const double ratio = lvl.df[i].norm() / lvl.samples[i].radius;
    if (std::isnan(ratio)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, ratio);
  }
  return worst;
}

enum class ConeMode { Tangential, Directional };

DerivativeEstimate vacuous_estimate(const Subspace& v, int n, const ScaleSchedule& sched) {
  DerivativeEstimate est{LinearMap::zero(v, n), {}, {}, {VerdictKind::Differentiable, "vacuous: V = {0}"}};
  for (const auto& [delta, theta] : schedule_scales(sched)) {
    est.residuals.push_back({delta, theta, 0.0});
    est.growth.push_back({delta, theta, 0.0});
  }
  return est;
}

// `narrow` is the growth on the mid-schedule aperture cone at every radius. Growth that diverges there too
// rules out a derivative however small the coupled residuals get.
Verdict decide(const std::vector<CurvePoint>& residuals, const std::vector<CurvePoint>& growth,
               const std::vector<CurvePoint>& narrow, double drift, double l_norm, const EstimatorOptions& opts) {
  std::string div;
  if (divergence_rule(narrow, opts) && divergence_rule(growth, opts, &div)) return {VerdictKind::Divergent, div};
  std::string why;
  if (residual_rule(residuals, opts, &why)) {
    const double allowed = opts.refit_drift * std::max(l_norm, opts.tol_abs);
    if (drift < allowed) {
      return {VerdictKind::Differentiable, "residual " + fmt(residuals.back().value) + " <= " + fmt(opts.tol_abs) +
                                               ", nonincreasing, refit drift " + fmt(drift)};
    }
    why = "refit drift " + fmt(drift) + " exceeds " + fmt(allowed);
  }
  if (divergence_rule(growth, opts, &div)) return {VerdictKind::Divergent, div};
  return {VerdictKind::Inconclusive, why};
}

DerivativeEstimate estimate_on(const BlackBoxFn& f, const Vec& a, const Subspace& v,
                               std::span<const Vec> centres, const ScaleSchedule& sched,
                               const EstimatorOptions& opts, ConeMode mode) {
  if (a.size() != f.m || v.ambient_dim() != f.m) throw DimensionMismatch("estimate: dimension of a or V differs from f");
  if (v.dim() == 0) return vacuous_estimate(v, f.n, sched);

  const Vec fa = f(a);
  const auto scales = schedule_scales(sched);
  std::vector<LevelSamples> residual_levels;
  std::vector<LevelSamples> growth_levels;
  std::vector<LevelSamples> narrow_levels;
  const bool separate_growth = mode == ConeMode::Tangential && opts.growth_aperture == GrowthAperture::Fixed;
  for (const auto& [delta, theta] : scales) {
    const double aperture = mode == ConeMode::Tangential ? theta : 0.0;
    residual_levels.push_back(sample_level(f, a, fa, v, centres, delta, aperture, opts));
    if (separate_growth) growth_levels.push_back(sample_level(f, a, fa, v, centres, delta, sched.theta0, opts));
    if (mode == ConeMode::Tangential) {
      narrow_levels.push_back(sample_level(f, a, fa, v, centres, delta, scales[scales.size() / 2].theta, opts));
    }
  }
  const auto& growth_src = separate_growth ? growth_levels : residual_levels;

  const std::size_t K = residual_levels.size();
  const LevelSamples* finest_two[] = {&residual_levels[K - 2], &residual_levels[K - 1]};
  const LevelSamples* finest_one[] = {&residual_levels[K - 1]};
  const Matrix l = fit_map(v, finest_two, f.n);
  const Matrix l_fine = fit_map(v, finest_one, f.n);

  DerivativeEstimate est{LinearMap(v, l), {}, {}, {}};
  for (std::size_t k = 0; k < K; ++k) {
    est.residuals.push_back({scales[k].delta, scales[k].theta, worst_residual(v, residual_levels[k], l)});
    const double gtheta = separate_growth ? sched.theta0 : residual_levels[k].theta;
    est.growth.push_back({scales[k].delta, gtheta, worst_growth(growth_src[k])});
  }
  std::vector<CurvePoint> narrow;
  if (mode == ConeMode::Tangential) {
    for (std::size_t k = 0; k < K; ++k) {
      narrow.push_back({scales[k].delta, scales[K / 2].theta, worst_growth(narrow_levels[k])});
    }
  } else {
    narrow = est.growth;
  }
  est.verdict = decide(est.residuals, est.growth, narrow, spectral_norm(l_fine - l), spectral_norm(l), opts);
  return est;
}

}  // namespace

const char* to_string(VerdictKind kind) noexcept {
  switch (kind) {
    case VerdictKind::Differentiable: return "Differentiable";
    case VerdictKind::Divergent: return "Divergent";
    case VerdictKind::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

VerdictKind verdict_from_string(const std::string& name) {
  if (name == "Differentiable") return VerdictKind::Differentiable;
  if (name == "Divergent") return VerdictKind::Divergent;
  if (name == "Inconclusive") return VerdictKind::Inconclusive;
  throw std::invalid_argument("unknown verdict: " + name);
}

BlackBoxFn compose(const BlackBoxFn& g, const BlackBoxFn& f) {
  if (g.m != f.n) throw DimensionMismatch("compose: g input dimension differs from f output dimension");
  BlackBoxFn out;
  out.m = f.m;
  out.n = g.n;
  out.eval = [f, g](const Vec& x) { return g(f(x)); };
  out.domain = f.domain;
  return out;
}

bool residual_rule(const std::vector<CurvePoint>& curve, const EstimatorOptions& opts, std::string* why) {
  auto fail = [&](std::string msg) {
    if (why) *why = std::move(msg);
    return false;
  };
  if (curve.empty()) return fail("empty residual curve");
  const double last = curve.back().value;
  if (!(last <= opts.tol_abs)) return fail("finest residual " + fmt(last) + " > tol " + fmt(opts.tol_abs));
  const std::size_t window = half_window(curve.size());
  for (std::size_t k = curve.size() - window; k + 1 < curve.size(); ++k) {
    if (curve[k + 1].value > opts.slack * curve[k].value + opts.noise_floor) {
      return fail("residual increases at level " + std::to_string(k + 1));
    }
  }
  return true;
}

bool divergence_rule(const std::vector<CurvePoint>& curve, const EstimatorOptions& opts, std::string* why) {
  for (std::size_t k = 0; k < curve.size(); ++k) {
    if (!(curve[k].value <= opts.cap)) {
      if (why) *why = "growth " + fmt(curve[k].value) + " exceeds cap at level " + std::to_string(k);
      return true;
    }
  }
  std::size_t start = 0;
  for (std::size_t k = 1; k <= curve.size(); ++k) {
    const bool continues = k < curve.size() && curve[k].value > curve[k - 1].value;
    if (continues) continue;
    // run [start, k-1]
    const std::size_t length = k - start;
    if (length >= 3 && curve[start].value > 0.0 &&
        curve[k - 1].value >= opts.divergence_factor * curve[start].value) {
      if (why) {
        *why = "growth rises by " + fmt(curve[k - 1].value / curve[start].value) + " over levels " +
               std::to_string(start) + ".." + std::to_string(k - 1);
      }
      return true;
    }
    start = k;
  }
  if (why) *why = "growth stays bounded";
  return false;
}

std::vector<Vec> evaluate_all(const BlackBoxFn& f, std::span<const Vec> points, int threads) {
  std::vector<Vec> out(points.size());
  std::size_t workers = threads <= 0 ? std::max(1u, std::thread::hardware_concurrency())
                                     : static_cast<std::size_t>(threads);
  workers = std::min(workers, std::max<std::size_t>(1, points.size() / 32));
  if (workers <= 1) {
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = f(points[i]);
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (points.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(points.size(), lo + chunk);
    pool.emplace_back([&, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) out[i] = f(points[i]);
    });
  }
  pool.clear();  // join
  return out;
}

DerivativeEstimate estimate_tangential(const BlackBoxFn& f, const Vec& a, const Subspace& v,
                                       const ScaleSchedule& sched, const EstimatorOptions& opts) {
  const auto centres = direction_mesh(v, opts.count_per_dim, opts.seed);
  return estimate_on(f, a, v, centres, sched, opts, ConeMode::Tangential);
}

DerivativeEstimate estimate_directional(const BlackBoxFn& f, const Vec& a, const Subspace& v,
                                        const ScaleSchedule& sched, const EstimatorOptions& opts) {
  const auto centres = direction_mesh(v, opts.count_per_dim, opts.seed);
  return estimate_on(f, a, v, centres, sched, opts, ConeMode::Directional);
}

ConeGrowth cone_growth(const BlackBoxFn& f, const Vec& a, const Subspace& v, const ScaleSchedule& sched,
                       const EstimatorOptions& opts) {
  if (a.size() != f.m || v.ambient_dim() != f.m) throw DimensionMismatch("cone_growth: dimension mismatch");
  ConeGrowth out;
  if (v.dim() == 0) {
    for (const auto& [delta, theta] : schedule_scales(sched)) out.growth.push_back({delta, theta, 0.0});
    return out;
  }
  const Vec fa = f(a);
  const auto centres = direction_mesh(v, opts.count_per_dim, opts.seed);
  for (const auto& [delta, theta] : schedule_scales(sched)) {
    const double aperture = opts.growth_aperture == GrowthAperture::Fixed ? sched.theta0 : theta;
    const auto lvl = sample_level(f, a, fa, v, centres, delta, aperture, opts);
    out.growth.push_back({delta, aperture, worst_growth(lvl)});
  }
  const std::size_t window = half_window(out.growth.size());
  const std::size_t first = out.growth.size() - window;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = first; k < out.growth.size(); ++k) {
    const double g = out.growth[k].value;
    if (!(g > 0.0) || !std::isfinite(g)) return out;
    const double x = std::log(out.growth[k].delta);
    const double y = std::log(g);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(window);
  out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return out;
}

bool DirectionProfile::all_differentiable() const {
  return std::all_of(entries.begin(), entries.end(), [](const DirectionEntry& e) {
    return e.estimate && e.estimate->verdict.differentiable();
  });
}

DirectionProfile per_direction_profile(const BlackBoxFn& f, const Vec& a, const Subspace& v,
                                       std::span<const Vec> dirs, const ScaleSchedule& sched,
                                       const EstimatorOptions& opts) {
  DirectionProfile out{{}, LinearMap::zero(v, f.n), 0.0};
  std::vector<Vec> coords;
  std::vector<Vec> values;
  for (const Vec& d : dirs) {
    if (d.size() != v.ambient_dim()) throw DimensionMismatch("per_direction_profile: direction dimension");
    if (std::abs(d.norm() - 1.0) > 1e-9 || dist_to_subspace(v, d) > 1e-9) {
      throw std::invalid_argument("per_direction_profile: directions must be unit vectors in V");
    }
    DirectionEntry entry{d, std::nullopt, {}};
    const Vec centre[] = {d};
    const Vec span[] = {d};
    const Subspace ray = orthonormalize(span, d.size());
    try {
      entry.estimate = estimate_on(f, a, ray, centre, sched, opts, ConeMode::Tangential);
      coords.push_back(v.coords(d));
      values.push_back(entry.estimate->L.matrix().col(0));
    } catch (const InsufficientSamples& e) {
      entry.error = e.what();
    }
    out.entries.push_back(std::move(entry));
  }
  if (!coords.empty() && v.dim() > 0) {
    Matrix design(static_cast<Eigen::Index>(coords.size()), v.dim());
    Matrix rhs(static_cast<Eigen::Index>(coords.size()), f.n);
    for (std::size_t i = 0; i < coords.size(); ++i) {
      design.row(static_cast<Eigen::Index>(i)) = coords[i].transpose();
      rhs.row(static_cast<Eigen::Index>(i)) = values[i].transpose();
    }
    const Matrix m = design.completeOrthogonalDecomposition().solve(rhs).transpose();
    out.fit = LinearMap(v, m);
    for (std::size_t i = 0; i < coords.size(); ++i) {
      out.linearity_residual = std::max(out.linearity_residual, (values[i] - m * coords[i]).norm());
    }
  }
  return out;
}

TwoPointResult two_point_cone_lipschitz(const BlackBoxFn& f, const Vec& a, const Subspace& v,
                                        const ScaleSchedule& sched, const EstimatorOptions& opts) {
  if (a.size() != f.m || v.ambient_dim() != f.m) throw DimensionMismatch("two_point_cone_lipschitz: dimension mismatch");
  TwoPointResult out{{}, true, "vacuous: V = {0}"};
  const auto scales = schedule_scales(sched);
  if (v.dim() == 0) {
    for (const auto& [delta, theta] : scales) out.ratios.push_back({delta, theta, 0.0});
    return out;
  }
  const Vec fa = f(a);
  const auto centres = direction_mesh(v, opts.count_per_dim, opts.seed);
  for (const auto& [delta, theta] : scales) {
    const auto lvl = sample_level(f, a, fa, v, centres, delta, theta, opts);
    double worst = 0.0;
    const std::size_t n = lvl.samples.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = (lvl.samples[i].point - lvl.samples[j].point).norm();
        if (dx <= 1e-12 * delta) continue;
        const double q = (lvl.df[i] - lvl.df[j]).norm() / dx;
        worst = std::isnan(q) ? std::numeric_limits<double>::infinity() : std::max(worst, q);
      }
    }
    out.ratios.push_back({delta, theta, worst});
  }
  out.reason = "difference quotients bounded";
  for (std::size_t k = 0; k < out.ratios.size(); ++k) {
    if (!(out.ratios[k].value <= opts.cap)) {
      out.bounded = false;
      out.reason = "quotient exceeds cap at level " + std::to_string(k);
      return out;
    }
  }
  for (std::size_t k = 2; k + 1 < out.ratios.size(); ++k) {
    if (out.ratios[k + 1].value > opts.slack * out.ratios[k].value + opts.noise_floor) {
      out.bounded = false;
      out.reason = "quotient grows from " + fmt(out.ratios[k].value) + " to " + fmt(out.ratios[k + 1].value) +
                   " at level " + std::to_string(k + 1);
      return out;
    }
  }
  return out;
}

ChainResult chain_condition(const BlackBoxFn& f, const BlackBoxFn& g, const Vec& a, const Subspace& v,
                            const LinearMap& l, const ScaleSchedule& sched, const EstimatorOptions& opts) {
  if (g.m != f.n) throw DimensionMismatch("chain_condition: g input dimension differs from f output dimension");
  if (a.size() != f.m || v.ambient_dim() != f.m) throw DimensionMismatch("chain_condition: dimension mismatch");
  ChainResult out{false, {}, {}};
  const auto scales = schedule_scales(sched);
  if (v.dim() == 0) {
    for (const auto& [delta, theta] : scales) out.levels.push_back({delta, theta, theta, 0, 0, true, 0.0, 0.0, {}});
    out.holds = true;
    out.reason = "vacuous: V = {0}";
    return out;
  }
  const Vec fa = f(a);
  const Vec gfa = g(fa);
  const auto centres = direction_mesh(v, opts.count_per_dim, opts.seed);
  std::vector<CurvePoint> curve;
  for (const auto& [delta, theta] : scales) {
    const auto lvl = sample_level(f, a, fa, v, centres, delta, theta, opts);
    const double kappa = theta;
    ChainLevel level{delta, theta, kappa, lvl.samples.size(), 0, true, 0.0, 0.0, {}};
    std::vector<Vec> images;
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < lvl.samples.size(); ++i) {
      if (lvl.df[i].norm() <= kappa * lvl.samples[i].radius) {
        kept.push_back(i);
        images.push_back(fa + lvl.df[i]);
      }
    }
    const auto gvals = evaluate_all(g, images, opts.threads);
    level.survivors = kept.size();
    level.vacuous = kept.empty();
    for (std::size_t j = 0; j < kept.size(); ++j) {
      const auto& s = lvl.samples[kept[j]];
      double c = (gvals[j] - gfa).norm() / s.radius;
      if (std::isnan(c)) c = std::numeric_limits<double>::infinity();
      if (c >= level.c) {
        level.c = c;
        level.witness = s.point;
      }
      const Vec pred = l.matrix() * v.coords(s.v_component);
      level.f_residual = std::max(level.f_residual, (lvl.df[kept[j]] - pred).norm() / s.radius);
    }
    curve.push_back({delta, theta, level.c});
    out.levels.push_back(std::move(level));
  }
  std::string why;
  out.holds = residual_rule(curve, opts, &why);
  const auto vacuous = std::count_if(out.levels.begin(), out.levels.end(), [](const ChainLevel& c) { return c.vacuous; });
  out.reason = out.holds ? "c_k -> 0 (" + std::to_string(vacuous) + " vacuous levels)" : why;
  return out;
}

ComposeReport compose_and_check(const BlackBoxFn& f, const BlackBoxFn& g, const Vec& a, const Subspace& v,
                                const ScaleSchedule& sched, const EstimatorOptions& opts) {
  DerivativeEstimate f_est = estimate_tangential(f, a, v, sched, opts);
  const Matrix& lm = f_est.L.matrix();

  // Image L[V]: left singular vectors above tol_abs; smaller directions are numerically zero.
  Matrix image_basis(f.n, 0);
  if (lm.size() > 0) {
    Eigen::JacobiSVD<Matrix> svd(lm, Eigen::ComputeThinU);
    Eigen::Index rank = 0;
    while (rank < svd.singularValues().size() && svd.singularValues()(rank) > opts.tol_abs) ++rank;
    image_basis = svd.matrixU().leftCols(rank);
  }
  Subspace image = orthonormalize(image_basis.size() > 0 ? image_basis : Matrix(f.n, 0));

  const Vec fa = f(a);
  DerivativeEstimate g_est = estimate_tangential(g, fa, image, sched, opts);
  const BlackBoxFn gf = compose(g, f);
  DerivativeEstimate c_est = estimate_tangential(gf, a, v, sched, opts);

  Matrix kl = g_est.L.matrix() * image.basis().transpose() * lm;
  const double deviation = spectral_norm(c_est.L.matrix() - kl);
  const double scale = std::max({1.0, spectral_norm(c_est.L.matrix()), spectral_norm(kl)});
  const bool match = deviation <= opts.match_tol * scale;

  ChainResult chain = chain_condition(f, g, a, v, f_est.L, sched, opts);
  const double gain = min_gain(f_est.L);
  const bool injective = v.dim() == 0 || gain > opts.tol_abs;
  TwoPointResult lip = two_point_cone_lipschitz(g, fa, Subspace::full(g.m), sched, opts);

  return ComposeReport{std::move(f_est), std::move(image), std::move(g_est), std::move(c_est), std::move(kl),
                       deviation, match, std::move(chain), gain, injective, std::move(lip)};
}

}  // namespace conederiv
