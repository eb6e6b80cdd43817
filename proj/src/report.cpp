#include "conederiv/report.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "conederiv/errors.hpp"
#include "conederiv/fixtures.hpp"

namespace conederiv {

namespace fs = std::filesystem;

namespace {

constexpr double kSlopeTolerance = 0.1;

const std::set<std::string> kExperimentKeys = {"kind",   "name",      "fixture",  "case",    "pair",
                                               "estimator", "expect", "path",   "path_file", "schedule",
                                               "options", "seed"};
const std::set<std::string> kEstimators = {"tangential", "directional", "cone_growth", "two_point", "profile"};

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

struct Defaults {
  ScaleSchedule schedule;
  EstimatorOptions options;
  std::uint64_t seed = 0;
};

ScaleSchedule apply(ScaleSchedule s, const ConfigOverrides& over) {
  if (over.delta0) s.delta0 = *over.delta0;
  if (over.theta0) s.theta0 = *over.theta0;
  if (over.rho) s.rho = *over.rho;
  if (over.levels) s.levels = *over.levels;
  s.validate();
  return s;
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string short_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string target_of(const Json& j, const std::string& kind) {
  if (kind == "chain") {
    if (j.contains("case")) return j.at("case").get<std::string>();
    if (j.contains("pair")) return j.at("pair").get<std::string>();
    throw ConfigError("chain experiment needs 'case'");
  }
  if (!j.contains("fixture")) throw ConfigError(kind + " experiment needs 'fixture'");
  return j.at("fixture").get<std::string>();
}

void check_expect(const ExperimentConfig& e) {
  if (!e.expect) return;
  const Json& x = *e.expect;
  auto want_string = [&](std::initializer_list<const char*> allowed) {
    if (!x.is_string()) throw ConfigError(e.name + ": 'expect' must be a string");
    const auto s = x.get<std::string>();
    for (const char* a : allowed) {
      if (s == a) return;
    }
    throw ConfigError(e.name + ": unsupported expectation '" + s + "'");
  };
  if (e.kind == "chain") {
    want_string({"Holds", "Fails"});
  } else if (e.kind == "path" || e.estimator == "tangential" || e.estimator == "directional") {
    want_string({"Differentiable", "Divergent", "Inconclusive"});
  } else if (e.estimator == "cone_growth") {
    if (!x.is_number()) throw ConfigError(e.name + ": cone_growth 'expect' must be a slope");
  } else if (e.estimator == "two_point") {
    want_string({"bounded", "unbounded"});
  } else {
    want_string({"linear", "nonlinear", "not_differentiable"});
  }
}

ExperimentConfig parse_experiment(const Json& j, const Defaults& d, const ConfigOverrides& over,
                                  const fs::path& base_dir) {
  check_keys(j, kExperimentKeys, "experiment");
  ExperimentConfig e;
  if (!j.contains("kind")) throw ConfigError("experiment: missing 'kind'");
  e.kind = j.at("kind").get<std::string>();
  if (e.kind != "estimate" && e.kind != "chain" && e.kind != "path") {
    throw ConfigError("experiment: kind must be estimate, chain or path, got '" + e.kind + "'");
  }
  e.target = target_of(j, e.kind);
  if (e.kind == "estimate") {
    e.estimator = j.value("estimator", std::string("tangential"));
    if (!kEstimators.count(e.estimator)) throw ConfigError("unknown estimator '" + e.estimator + "'");
  } else {
    e.estimator.clear();
  }

  e.schedule = d.schedule;
  e.options = d.options;
  e.options.seed = d.seed;
  if (j.contains("schedule")) e.schedule = schedule_from_json(j.at("schedule"), e.schedule);
  if (j.contains("options")) e.options = options_from_json(j.at("options"), e.options);
  if (j.contains("seed")) e.options.seed = j.at("seed").get<std::uint64_t>();
  e.schedule = apply(e.schedule, over);
  if (over.tol_abs) e.options.tol_abs = *over.tol_abs;
  if (over.seed) e.options.seed = *over.seed;

  if (e.kind == "chain") {
    (void)find_chain_case(e.target);
  } else {
    const Fixture fx = find_fixture(e.target);
    if (e.kind == "path") {
      Json p;
      if (j.contains("path")) {
        p = j.at("path");
      } else if (j.contains("path_file")) {
        const fs::path file = base_dir / j.at("path_file").get<std::string>();
        std::ifstream in(file);
        if (!in) throw ConfigError("cannot read path file " + file.string());
        p = Json::parse(in);
      } else {
        throw ConfigError("path experiment needs 'path' or 'path_file'");
      }
      const PiecewisePath path = path_from_json(p);
      if (path.base().size() != fx.base_point.size() || (path.base() - fx.base_point).norm() > 1e-12) {
        throw ConfigError("path base differs from the base point of " + fx.name);
      }
      const Vec& v = path.velocity();
      if (dist_to_subspace(fx.subspace, v) > 1e-9 * std::max(1.0, v.norm())) {
        throw ConfigError("path velocity is not in the subspace of " + fx.name);
      }
      e.path = p;
    }
  }

  if (j.contains("expect")) e.expect = j.at("expect");
  if (j.contains("name")) {
    e.name = j.at("name").get<std::string>();
  } else if (e.kind == "estimate") {
    e.name = e.target + "/" + e.estimator;
  } else {
    e.name = e.kind + "/" + e.target;
  }
  check_expect(e);
  return e;
}

std::vector<CurveRow> zip_curves(const std::vector<CurvePoint>* residual, const std::vector<CurvePoint>* growth) {
  std::vector<CurveRow> rows;
  const std::size_t n = std::max(residual ? residual->size() : 0, growth ? growth->size() : 0);
  for (std::size_t k = 0; k < n; ++k) {
    CurveRow row{static_cast<int>(k), 0.0, 0.0, std::nullopt, std::nullopt};
    if (residual && k < residual->size()) {
      row.delta = (*residual)[k].delta;
      row.theta = (*residual)[k].theta;
      row.residual = (*residual)[k].value;
    }
    if (growth && k < growth->size()) {
      if (!residual || k >= residual->size()) {
        row.delta = (*growth)[k].delta;
        row.theta = (*growth)[k].theta;
      }
      row.growth = (*growth)[k].value;
    }
    rows.push_back(row);
  }
  return rows;
}

std::optional<std::string> expected_string(const std::optional<Json>& e) {
  if (!e) return std::nullopt;
  return e->is_string() ? e->get<std::string>() : short_number(e->get<double>());
}

void run_estimate(const ExperimentConfig& cfg, ExperimentResult& r) {
  const Fixture fx = find_fixture(cfg.target);
  const auto& sched = cfg.schedule;
  const auto& opts = cfg.options;

  if (cfg.estimator == "tangential" || cfg.estimator == "directional") {
    const bool tangential = cfg.estimator == "tangential";
    const DerivativeEstimate e = tangential ? estimate_tangential(fx.f, fx.base_point, fx.subspace, sched, opts)
                                            : estimate_directional(fx.f, fx.base_point, fx.subspace, sched, opts);
    r.result = estimate_to_json(e);
    r.curves = zip_curves(&e.residuals, &e.growth);
    r.observed = to_string(e.verdict.kind);
    std::optional<VerdictKind> want = tangential ? fx.expected.tangential : fx.expected.directional;
    if (cfg.expect) want = verdict_from_string(cfg.expect->get<std::string>());
    if (!want) {
      r.passed = true;
      return;
    }
    r.expected = to_string(*want);
    r.passed = e.verdict.kind == *want;
    if (r.passed && !cfg.expect && *want == VerdictKind::Differentiable && fx.expected.derivative) {
      const Matrix& d = *fx.expected.derivative;
      const double err = (e.L.matrix() - d).norm() / std::max(1.0, d.norm());
      r.result["derivative_error"] = err;
      r.passed = err <= opts.match_tol;
    }
    return;
  }

  if (cfg.estimator == "cone_growth") {
    const ConeGrowth g = cone_growth(fx.f, fx.base_point, fx.subspace, sched, opts);
    r.result = cone_growth_to_json(g);
    r.curves = zip_curves(nullptr, &g.growth);
    r.observed = g.slope ? short_number(*g.slope) : "none";
    std::optional<double> want = fx.expected.growth_slope;
    if (cfg.expect) want = cfg.expect->get<double>();
    if (!want) {
      r.passed = true;
      return;
    }
    r.expected = short_number(*want);
    r.passed = g.slope && std::abs(*g.slope - *want) <= kSlopeTolerance;
    return;
  }

  if (cfg.estimator == "two_point") {
    const TwoPointResult t = two_point_cone_lipschitz(fx.f, fx.base_point, fx.subspace, sched, opts);
    r.result = two_point_to_json(t);
    r.curves = zip_curves(nullptr, &t.ratios);
    r.observed = t.bounded ? "bounded" : "unbounded";
    r.expected = expected_string(cfg.expect);
    r.passed = !r.expected || *r.expected == r.observed;
    return;
  }

  const std::vector<Vec> dirs = direction_mesh(fx.subspace, opts.count_per_dim, opts.seed);
  const DirectionProfile p = per_direction_profile(fx.f, fx.base_point, fx.subspace, dirs, sched, opts);
  r.result = profile_to_json(p);
  if (!p.all_differentiable()) {
    r.observed = "not_differentiable";
  } else {
    r.observed = p.linearity_residual <= opts.linearity_tol ? "linear" : "nonlinear";
  }
  r.expected = expected_string(cfg.expect);
  if (!r.expected && fx.expected.tangential == VerdictKind::Differentiable) r.expected = "linear";
  r.passed = !r.expected || *r.expected == r.observed;
}

void run_chain(const ExperimentConfig& cfg, ExperimentResult& r) {
  const ChainCase c = find_chain_case(cfg.target);
  const ComposeReport rep = compose_and_check(c.f, c.g, c.base_point, c.subspace, cfg.schedule, cfg.options);
  r.result = compose_to_json(rep);
  std::vector<CurvePoint> chain_curve;
  for (const auto& l : rep.chain.levels) chain_curve.push_back({l.delta, l.theta, l.c});
  r.curves = zip_curves(&chain_curve, &rep.composite.growth);
  r.observed = rep.chain.holds ? "Holds" : "Fails";
  r.expected = cfg.expect ? cfg.expect->get<std::string>() : std::string(c.expect_holds ? "Holds" : "Fails");
  r.passed = r.observed == *r.expected && rep.consistent();
  if (!cfg.expect) r.passed = r.passed && rep.composite_ok() == c.expect_composite;
}

void run_path(const ExperimentConfig& cfg, ExperimentResult& r) {
  const Fixture fx = find_fixture(cfg.target);
  const PiecewisePath path = path_from_json(*cfg.path);
  const auto n = static_cast<Eigen::Index>(fx.f.n);
  const Matrix d = fx.expected.derivative.value_or(Matrix::Zero(n, fx.subspace.dim()));
  const PullbackResult pb = pullback_test(fx.f, path, LinearMap(fx.subspace, d), cfg.schedule, cfg.options);
  r.result = pullback_to_json(pb);
  r.curves = zip_curves(&pb.residuals, &pb.quotients);
  r.observed = to_string(pb.verdict.kind);
  r.expected = expected_string(cfg.expect);
  if (!r.expected && fx.expected.tangential == VerdictKind::Differentiable) r.expected = "Differentiable";
  r.passed = !r.expected || *r.expected == r.observed;
}

Json entry_to_json(const ExperimentResult& e, bool wall_clock) {
  Json j{{"name", e.name},
         {"kind", e.kind},
         {"target", e.target},
         {"expected", e.expected ? Json(*e.expected) : Json(nullptr)},
         {"observed", e.observed},
         {"passed", e.passed},
         {"settings", e.settings},
         {"result", e.result}};
  if (!e.estimator.empty()) j["estimator"] = e.estimator;
  if (!e.error.empty()) j["error"] = e.error;
  if (wall_clock) j["wall_clock_ms"] = e.wall_clock_ms;
  return j;
}

}  // namespace

SuiteConfig parse_config(const Json& j, const ConfigOverrides& over, const fs::path& base_dir) {
  try {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    if (!j.contains("kind")) throw ConfigError("config: missing 'kind'");
    SuiteConfig cfg;
    cfg.kind = j.at("kind").get<std::string>();
    cfg.raw = j;

    Defaults d;
    d.seed = j.value("seed", std::uint64_t{0});
    if (over.seed) d.seed = *over.seed;
    cfg.seed = d.seed;
    cfg.output = j.value("output", std::string("report.json"));

    Json overrides = Json::object();
    if (over.seed) overrides["seed"] = *over.seed;
    if (over.delta0) overrides["delta0"] = *over.delta0;
    if (over.theta0) overrides["theta0"] = *over.theta0;
    if (over.rho) overrides["rho"] = *over.rho;
    if (over.levels) overrides["levels"] = *over.levels;
    if (over.tol_abs) overrides["tol_abs"] = *over.tol_abs;
    if (!overrides.empty()) cfg.raw["overrides"] = overrides;

    if (cfg.kind == "suite") {
      check_keys(j, {"kind", "name", "schedule", "options", "seed", "output", "experiments"}, "suite config");
      if (j.contains("schedule")) d.schedule = schedule_from_json(j.at("schedule"));
      if (j.contains("options")) d.options = options_from_json(j.at("options"));
      if (!j.contains("experiments")) cfg.raw["experiments"] = default_suite_json().at("experiments");
      const Json& list = cfg.raw.at("experiments");
      if (!list.is_array()) throw ConfigError("suite config: 'experiments' must be an array");
      for (const Json& item : list) cfg.experiments.push_back(parse_experiment(item, d, over, base_dir));
    } else {
      Json single = j;
      single.erase("output");
      cfg.experiments.push_back(parse_experiment(single, d, over, base_dir));
    }

    std::map<std::string, int> seen;
    for (auto& e : cfg.experiments) {
      const int count = ++seen[e.name];
      if (count > 1) e.name += "#" + std::to_string(count);
    }
    return cfg;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

SuiteConfig load_config(const fs::path& file, const ConfigOverrides& over) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config " + file.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("parse error in " + file.string() + ": " + e.what());
  }
  return parse_config(j, over, file.parent_path());
}

Json default_suite_json() {
  Json list = Json::array();
  for (const Fixture& fx : catalog()) {
    list.push_back({{"kind", "estimate"}, {"fixture", fx.name}, {"estimator", "directional"}});
    list.push_back({{"kind", "estimate"}, {"fixture", fx.name}, {"estimator", "tangential"}});
    if (fx.expected.growth_slope) {
      list.push_back({{"kind", "estimate"}, {"fixture", fx.name}, {"estimator", "cone_growth"}});
    }
  }
  for (const ChainCase& c : chain_catalog()) list.push_back({{"kind", "chain"}, {"case", c.name}});
  return {{"kind", "suite"}, {"experiments", std::move(list)}};
}

bool SuiteReport::all_passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const ExperimentResult& e) { return e.passed; });
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult r;
  r.name = cfg.name;
  r.kind = cfg.kind;
  r.target = cfg.target;
  r.estimator = cfg.estimator;
  r.settings = {{"schedule", schedule_to_json(cfg.schedule)}, {"options", options_to_json(cfg.options)}};
  if (cfg.path) r.settings["path"] = *cfg.path;

  const auto start = std::chrono::steady_clock::now();
  try {
    if (cfg.kind == "estimate") {
      run_estimate(cfg, r);
    } else if (cfg.kind == "chain") {
      run_chain(cfg, r);
    } else {
      run_path(cfg, r);
    }
  } catch (const InsufficientSamples& e) {
    r.observed = "SamplingFailure";
    r.error = e.what();
    r.passed = false;
  } catch (const std::exception& e) {
    r.observed = "Error";
    r.error = e.what();
    r.passed = false;
  }
  r.wall_clock_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

SuiteReport run_suite(const SuiteConfig& cfg, int workers) {
  SuiteReport report;
  report.config = cfg.raw;
  report.seed = cfg.seed;
  const std::size_t n = cfg.experiments.size();
  report.entries.resize(n);
  workers = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(n, 1)));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) report.entries[i] = run_experiment(cfg.experiments[i]);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return report;
}

Json report_to_json(const SuiteReport& r, bool wall_clock) {
  Json entries = Json::array();
  std::size_t passed = 0;
  for (const auto& e : r.entries) {
    entries.push_back(entry_to_json(e, wall_clock));
    passed += e.passed ? 1 : 0;
  }
  return {{"tool", "conederiv"},
          {"version", kVersion},
          {"config", r.config},
          {"defaults", {{"schedule", schedule_to_json({})}, {"options", options_to_json({})}}},
          {"seed", r.seed},
          {"entries", std::move(entries)},
          {"summary", {{"total", r.entries.size()}, {"passed", passed}, {"failed", r.entries.size() - passed}}},
          {"all_passed", r.all_passed()}};
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string sanitize_name(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_';
    out += keep ? c : '_';
  }
  return out.empty() ? "experiment" : out;
}

std::vector<fs::path> emit_curves(const SuiteReport& r, const fs::path& dir, std::ostream& warn) {
  std::vector<fs::path> written;
  std::map<std::string, int> used;
  for (const auto& e : r.entries) {
    if (e.curves.empty()) continue;
    std::string stem = sanitize_name(e.name);
    if (const int k = used[stem]++; k > 0) stem += "_" + std::to_string(k + 1);
    std::ostringstream csv;
    csv << "level,delta,theta,residual,growth\n";
    for (const auto& row : e.curves) {
      csv << row.level << ',' << format_number(row.delta) << ',' << format_number(row.theta) << ','
          << (row.residual ? format_number(*row.residual) : "") << ','
          << (row.growth ? format_number(*row.growth) : "") << '\n';
    }
    const fs::path file = dir / (stem + ".csv");
    write_atomic(file, csv.str());
    written.push_back(file);
  }
  if (written.empty()) warn << "warning: no curves to write\n";
  return written;
}

std::string path_table_csv(const PiecewisePath& p, int samples) {
  if (samples < 2) throw std::invalid_argument("path table needs at least 2 samples");
  const auto m = p.base().size();
  std::ostringstream csv;
  csv << 't';
  for (Eigen::Index i = 1; i <= m; ++i) csv << ",x" << i;
  for (Eigen::Index i = 1; i <= m; ++i) csv << ",dx" << i;
  csv << '\n';
  const double t0 = p.knots_t().front();
  for (int j = 0; j < samples; ++j) {
    const double t = j == samples - 1 ? t0 : t0 * j / (samples - 1);
    const Vec x = p.eval(t);
    const Vec dx = p.deriv(t);
    csv << format_number(t);
    for (Eigen::Index i = 0; i < m; ++i) csv << ',' << format_number(x(i));
    for (Eigen::Index i = 0; i < m; ++i) csv << ',' << format_number(dx(i));
    csv << '\n';
  }
  return csv.str();
}

int worker_count_from_env() {
  int n = 0;
  if (const char* s = std::getenv("CONEDERIV_THREADS")) n = std::atoi(s);
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(n, 1);
}

int run_and_write(const SuiteConfig& cfg, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  const SuiteReport report = run_suite(cfg, worker_count_from_env());
  const fs::path report_path = out_dir.empty() ? fs::path(cfg.output) : out_dir / cfg.output;
  try {
    write_atomic(report_path, report_to_json(report).dump(2) + "\n");
    const fs::path parent = report_path.has_parent_path() ? report_path.parent_path() : fs::path(".");
    emit_curves(report, parent / "curves", err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailed;
  }

  std::size_t passed = 0;
  for (const auto& e : report.entries) {
    passed += e.passed ? 1 : 0;
    out << (e.passed ? "PASS  " : "FAIL  ") << e.name << "  observed=" << e.observed;
    if (e.expected) out << " expected=" << *e.expected;
    if (!e.error.empty()) out << "  (" << e.error << ')';
    out << '\n';
  }
  out << passed << '/' << report.entries.size() << " passed; report: " << report_path.string() << '\n';
  return report.all_passed() ? kExitOk : kExitFailed;
}

int run_config(const fs::path& file, const ConfigOverrides& over, const fs::path& out_dir, std::ostream& out,
               std::ostream& err) {
  SuiteConfig cfg;
  try {
    cfg = load_config(file, over);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  return run_and_write(cfg, out_dir, out, err);
}

}  // namespace conederiv
