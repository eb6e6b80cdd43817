#include "conederiv/json_io.hpp"

#include <cmath>
#include <stdexcept>

namespace conederiv {

namespace {

/// JSON has no inf/nan; non-finite numbers are written as null.
Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double number_from(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

const char* aperture_name(GrowthAperture g) { return g == GrowthAperture::Fixed ? "fixed" : "coupled"; }

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(number(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, Eigen::Index rows_if_empty, Eigen::Index cols_if_empty) {
  if (!j.is_array()) throw std::invalid_argument("matrix: expected nested arrays");
  if (j.empty()) return Matrix(rows_if_empty, cols_if_empty);
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::invalid_argument("matrix: ragged rows");
    }
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = number_from(row.at(static_cast<std::size_t>(k)));
  }
  return m;
}

Json vec_to_json(const Vec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

Vec vec_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("vector: expected an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Json subspace_to_json(const Subspace& v) {
  return {{"ambient_dim", v.ambient_dim()}, {"basis", matrix_to_json(v.basis())}};
}

Subspace subspace_from_json(const Json& j) {
  const auto m = j.at("ambient_dim").get<Eigen::Index>();
  Matrix basis = matrix_from_json(j.at("basis"), m, 0);
  if (basis.rows() != m) throw std::invalid_argument("subspace: basis row count differs from ambient_dim");
  return Subspace(std::move(basis));
}

Json linear_map_to_json(const LinearMap& l) {
  Json j = subspace_to_json(l.domain());
  j["matrix"] = matrix_to_json(l.matrix());
  return j;
}

LinearMap linear_map_from_json(const Json& j) {
  Subspace domain = subspace_from_json(j);
  Matrix m = matrix_from_json(j.at("matrix"), 0, domain.dim());
  return LinearMap(std::move(domain), std::move(m));
}

Json schedule_to_json(const ScaleSchedule& s) {
  return {{"delta0", s.delta0}, {"theta0", s.theta0}, {"rho", s.rho}, {"levels", s.levels}};
}

ScaleSchedule schedule_from_json(const Json& j, ScaleSchedule base) {
  if (!j.is_object()) throw std::invalid_argument("schedule: expected an object");
  base.delta0 = j.value("delta0", base.delta0);
  base.theta0 = j.value("theta0", base.theta0);
  base.rho = j.value("rho", base.rho);
  base.levels = j.value("levels", base.levels);
  base.validate();
  return base;
}

Json options_to_json(const EstimatorOptions& o) {
  return {{"tol_abs", o.tol_abs},
          {"slack", o.slack},
          {"refit_drift", o.refit_drift},
          {"divergence_factor", o.divergence_factor},
          {"cap", o.cap},
          {"noise_floor", o.noise_floor},
          {"count_per_dim", o.count_per_dim},
          {"n_apertures", o.n_apertures},
          {"n_radii", o.n_radii},
          {"min_survivor_fraction", o.min_survivor_fraction},
          {"growth_aperture", aperture_name(o.growth_aperture)},
          {"linearity_tol", o.linearity_tol},
          {"match_tol", o.match_tol},
          {"seed", o.seed}};
}

EstimatorOptions options_from_json(const Json& j, EstimatorOptions base) {
  if (!j.is_object()) throw std::invalid_argument("options: expected an object");
  static const char* known[] = {"tol_abs", "slack", "refit_drift", "divergence_factor", "cap", "noise_floor",
                                "count_per_dim", "n_apertures", "n_radii", "min_survivor_fraction",
                                "growth_aperture", "linearity_tol", "match_tol", "seed", "threads"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw std::invalid_argument("options: unknown key '" + key + "'");
    }
  }
  base.tol_abs = j.value("tol_abs", base.tol_abs);
  base.slack = j.value("slack", base.slack);
  base.refit_drift = j.value("refit_drift", base.refit_drift);
  base.divergence_factor = j.value("divergence_factor", base.divergence_factor);
  base.cap = j.value("cap", base.cap);
  base.noise_floor = j.value("noise_floor", base.noise_floor);
  base.count_per_dim = j.value("count_per_dim", base.count_per_dim);
  base.n_apertures = j.value("n_apertures", base.n_apertures);
  base.n_radii = j.value("n_radii", base.n_radii);
  base.min_survivor_fraction = j.value("min_survivor_fraction", base.min_survivor_fraction);
  base.linearity_tol = j.value("linearity_tol", base.linearity_tol);
  base.match_tol = j.value("match_tol", base.match_tol);
  base.seed = j.value("seed", base.seed);
  base.threads = j.value("threads", base.threads);
  if (j.contains("growth_aperture")) {
    const auto name = j.at("growth_aperture").get<std::string>();
    if (name == "fixed") {
      base.growth_aperture = GrowthAperture::Fixed;
    } else if (name == "coupled") {
      base.growth_aperture = GrowthAperture::Coupled;
    } else {
      throw std::invalid_argument("options: growth_aperture must be 'fixed' or 'coupled'");
    }
  }
  if (!(base.tol_abs > 0.0)) throw std::invalid_argument("options: tol_abs must be > 0");
  if (!(base.slack >= 1.0)) throw std::invalid_argument("options: slack must be >= 1");
  if (base.count_per_dim < 1 || base.n_apertures < 1 || base.n_radii < 1) {
    throw std::invalid_argument("options: sampling counts must be >= 1");
  }
  return base;
}

Json curve_to_json(const std::vector<CurvePoint>& curve) {
  Json out = Json::array();
  for (const auto& p : curve) out.push_back(Json::array({number(p.delta), number(p.value)}));
  return out;
}

Json estimate_to_json(const DerivativeEstimate& e) {
  return {{"verdict", to_string(e.verdict.kind)},
          {"L", linear_map_to_json(e.L)},
          {"residuals", curve_to_json(e.residuals)},
          {"growth", curve_to_json(e.growth)},
          {"reason", e.verdict.reason}};
}

Json cone_growth_to_json(const ConeGrowth& g) {
  return {{"growth", curve_to_json(g.growth)}, {"slope", g.slope ? number(*g.slope) : Json(nullptr)}};
}

Json profile_to_json(const DirectionProfile& p) {
  Json entries = Json::array();
  for (const auto& e : p.entries) {
    Json entry{{"direction", vec_to_json(e.direction)}};
    if (e.estimate) {
      entry["estimate"] = estimate_to_json(*e.estimate);
    } else {
      entry["error"] = e.error;
    }
    entries.push_back(std::move(entry));
  }
  return {{"entries", std::move(entries)},
          {"fit", linear_map_to_json(p.fit)},
          {"linearity_residual", number(p.linearity_residual)},
          {"all_differentiable", p.all_differentiable()}};
}

Json two_point_to_json(const TwoPointResult& t) {
  return {{"ratios", curve_to_json(t.ratios)}, {"bounded", t.bounded}, {"reason", t.reason}};
}

Json chain_to_json(const ChainResult& c) {
  Json levels = Json::array();
  for (const auto& l : c.levels) {
    levels.push_back({{"delta", number(l.delta)},
                      {"theta", number(l.theta)},
                      {"kappa", number(l.kappa)},
                      {"samples", l.samples},
                      {"survivors", l.survivors},
                      {"vacuous", l.vacuous},
                      {"c", number(l.c)},
                      {"f_residual", number(l.f_residual)},
                      {"witness", l.witness ? vec_to_json(*l.witness) : Json(nullptr)}});
  }
  return {{"verdict", c.holds ? "Holds" : "Fails"}, {"levels", std::move(levels)}, {"reason", c.reason}};
}

Json compose_to_json(const ComposeReport& r) {
  return {{"f", estimate_to_json(r.f_estimate)},
          {"image", subspace_to_json(r.image)},
          {"g", estimate_to_json(r.g_estimate)},
          {"composite", estimate_to_json(r.composite)},
          {"KL", matrix_to_json(r.kl)},
          {"deviation", number(r.deviation)},
          {"match", r.match},
          {"chain", chain_to_json(r.chain)},
          {"min_gain", number(r.min_gain)},
          {"injective", r.injective},
          {"g_lipschitz", two_point_to_json(r.g_lipschitz)},
          {"composite_ok", r.composite_ok()},
          {"consistent", r.consistent()}};
}

Json pullback_to_json(const PullbackResult& p) {
  return {{"verdict", to_string(p.verdict.kind)},
          {"residuals", curve_to_json(p.residuals)},
          {"quotients", curve_to_json(p.quotients)},
          {"reason", p.verdict.reason}};
}

Json path_to_json(const PiecewisePath& p) {
  Json knots = Json::array();
  for (const Vec& x : p.knots_x()) knots.push_back(vec_to_json(x));
  return {{"base", vec_to_json(p.base())},
          {"knots_t", p.knots_t()},
          {"knots_x", std::move(knots)},
          {"velocity", vec_to_json(p.velocity())}};
}

PiecewisePath path_from_json(const Json& j) {
  std::vector<Vec> knots;
  for (const Json& x : j.at("knots_x")) knots.push_back(vec_from_json(x));
  return build_path(vec_from_json(j.at("base")), j.at("knots_t").get<std::vector<double>>(), knots,
                    vec_from_json(j.at("velocity")));
}

}  // namespace conederiv
