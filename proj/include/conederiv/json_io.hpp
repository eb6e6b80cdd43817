#pragma once

#include "json.hpp"

#include "conederiv/estimators.hpp"
#include "conederiv/linalg.hpp"
#include "conederiv/paths.hpp"
#include "conederiv/sampling.hpp"

namespace conederiv {

using Json = nlohmann::json;

// Row-major nested arrays; an m x 0 basis is written as m empty rows.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, Eigen::Index rows_if_empty = 0, Eigen::Index cols_if_empty = 0);
Json vec_to_json(const Vec& v);
Vec vec_from_json(const Json& j);

/// {"ambient_dim": m, "basis": [[...]]}
Json subspace_to_json(const Subspace& v);
Subspace subspace_from_json(const Json& j);
/// {"ambient_dim": m, "basis": [[...]], "matrix": [[...]]}
Json linear_map_to_json(const LinearMap& l);
LinearMap linear_map_from_json(const Json& j);

Json schedule_to_json(const ScaleSchedule& s);
/// Missing keys keep the values already in `base`; the result is validated.
ScaleSchedule schedule_from_json(const Json& j, ScaleSchedule base = {});

Json options_to_json(const EstimatorOptions& o);
EstimatorOptions options_from_json(const Json& j, EstimatorOptions base = {});

Json curve_to_json(const std::vector<CurvePoint>& curve);

/// {"verdict", "L", "residuals": [[delta, r], ...], "growth": [[delta, g], ...], "reason"}
Json estimate_to_json(const DerivativeEstimate& e);
Json cone_growth_to_json(const ConeGrowth& g);
Json profile_to_json(const DirectionProfile& p);
Json two_point_to_json(const TwoPointResult& t);
Json chain_to_json(const ChainResult& c);
Json compose_to_json(const ComposeReport& r);
Json pullback_to_json(const PullbackResult& p);

/// {"base": [...], "knots_t": [...], "knots_x": [[...]], "velocity": [...]}
Json path_to_json(const PiecewisePath& p);
PiecewisePath path_from_json(const Json& j);

}  // namespace conederiv
