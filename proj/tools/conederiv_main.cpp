#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "conederiv/errors.hpp"
#include "conederiv/fixtures.hpp"
#include "conederiv/json_io.hpp"
#include "conederiv/report.hpp"

namespace fs = std::filesystem;
using namespace conederiv;

namespace {

struct Common {
  std::string config;
  std::string out;
  ConfigOverrides over;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON experiment config");
  cmd->add_option("--out", c.out, "Output directory for the report and curves");
  cmd->add_option("--seed", c.over.seed, "Sampling seed");
  cmd->add_option("--delta0", c.over.delta0, "Initial radius");
  cmd->add_option("--theta0", c.over.theta0, "Initial aperture");
  cmd->add_option("--rho", c.over.rho, "Geometric ratio, in (0, 1)");
  cmd->add_option("--levels", c.over.levels, "Number of levels, >= 3");
  cmd->add_option("--tol-abs", c.over.tol_abs, "Absolute residual tolerance");
}

int run_from(const Common& c, const std::string& kind, const Json& inline_config) {
  SuiteConfig cfg;
  try {
    cfg = c.config.empty() ? parse_config(inline_config, c.over) : load_config(c.config, c.over);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (cfg.kind != kind) {
    std::cerr << "config error: config kind '" << cfg.kind << "' does not match subcommand '" << kind << "'\n";
    return kExitUsage;
  }
  return run_and_write(cfg, c.out, std::cout, std::cerr);
}

std::vector<double> parse_point(const std::vector<std::string>& parts) {
  std::vector<double> xs;
  for (const auto& part : parts) {
    std::stringstream ss(part);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) xs.push_back(std::stod(item));
    }
  }
  return xs;
}

int list_fixtures() {
  for (const Fixture& fx : catalog()) {
    std::cout << fx.name << "  R^" << fx.f.m << " -> R^" << fx.f.n << "  V dim " << fx.subspace.dim() << "  "
              << fx.role << '\n';
  }
  std::cout << '\n';
  for (const ChainCase& c : chain_catalog()) {
    std::cout << c.name << "  chain " << (c.expect_holds ? "holds" : "fails") << "  " << c.role << '\n';
  }
  return kExitOk;
}

int eval_fixture(const std::string& name, const std::vector<std::string>& coords) {
  try {
    const Fixture fx = find_fixture(name);
    const std::vector<double> xs = parse_point(coords);
    if (static_cast<int>(xs.size()) != fx.f.m) {
      std::cerr << "error: " << name << " takes " << fx.f.m << " coordinates, got " << xs.size() << '\n';
      return kExitUsage;
    }
    const Vec y = fx.f(Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size())));
    for (Eigen::Index i = 0; i < y.size(); ++i) std::printf(i ? " %.17g" : "%.17g", y(i));
    std::printf("\n");
    return kExitOk;
  } catch (const UnknownFixture& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

int run_path(const Common& c, const std::string& file, const std::string& fixture, int samples,
             const std::string& expect) {
  Json j;
  std::string csv;
  try {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read " + file);
    j = Json::parse(in);
    csv = path_table_csv(path_from_json(j), samples);
  } catch (const std::exception& e) {
    std::cerr << "path error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (c.out.empty()) {
    std::cout << csv;
  } else {
    try {
      write_atomic(fs::path(c.out) / "path_eval.csv", csv);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitFailed;
    }
  }
  if (fixture.empty()) return kExitOk;
  Json cfg{{"kind", "path"}, {"fixture", fixture}, {"path", j}};
  if (!expect.empty()) cfg["expect"] = expect;
  return run_from(c, "path", cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cone-sampled directional and tangential derivative checks"};
  app.require_subcommand(1);

  Common common;

  auto* estimate = app.add_subcommand("estimate", "Run one estimator on a fixture");
  add_common(estimate, common);
  std::string fixture, estimator = "tangential", expect;
  estimate->add_option("--fixture", fixture, "Fixture name");
  estimate->add_option("--estimator", estimator, "tangential, directional, cone_growth, two_point or profile");
  estimate->add_option("--expect", expect, "Override the expected outcome");

  auto* chain = app.add_subcommand("chain", "Check the chain condition on a catalog pair");
  add_common(chain, common);
  std::string case_name;
  chain->add_option("--case", case_name, "Chain case name");
  chain->add_option("--expect", expect, "Holds or Fails");

  auto* path = app.add_subcommand("path", "Evaluate a path file; optionally run the pullback test");
  add_common(path, common);
  std::string path_file;
  int samples = 101;
  path->add_option("file", path_file, "Path JSON")->required();
  path->add_option("--fixture", fixture, "Run the pullback test for this fixture");
  path->add_option("--samples", samples, "Rows in the evaluation table")->check(CLI::Range(2, 1000000));
  path->add_option("--expect", expect, "Expected pullback verdict");

  auto* suite = app.add_subcommand("suite", "Run a suite config, or the full default suite");
  add_common(suite, common);

  auto* fixtures = app.add_subcommand("fixtures", "Inspect the fixture catalog");
  fixtures->require_subcommand(1);
  auto* list = fixtures->add_subcommand("list", "List fixtures and chain cases");
  auto* eval = fixtures->add_subcommand("eval", "Evaluate a fixture at a point");
  std::string eval_name;
  std::vector<std::string> eval_point;
  eval->add_option("name", eval_name, "Fixture name")->required();
  eval->add_option("point", eval_point, "Coordinates, space or comma separated")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*estimate) {
    if (common.config.empty() && fixture.empty()) {
      std::cerr << "estimate: need --config or --fixture\n";
      return kExitUsage;
    }
    Json cfg{{"kind", "estimate"}, {"fixture", fixture}, {"estimator", estimator}};
    if (!expect.empty()) cfg["expect"] = expect;
    return run_from(common, "estimate", cfg);
  }
  if (*chain) {
    if (common.config.empty() && case_name.empty()) {
      std::cerr << "chain: need --config or --case\n";
      return kExitUsage;
    }
    Json cfg{{"kind", "chain"}, {"case", case_name}};
    if (!expect.empty()) cfg["expect"] = expect;
    return run_from(common, "chain", cfg);
  }
  if (*path) return run_path(common, path_file, fixture, samples, expect);
  if (*suite) return run_from(common, "suite", Json{{"kind", "suite"}});
  if (*list) return list_fixtures();
  if (*eval) return eval_fixture(eval_name, eval_point);
  return kExitUsage;
}
