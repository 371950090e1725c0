#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "aniso/error.hpp"
#include "aniso/experiments.hpp"
#include "doctest.h"

using namespace aniso;

namespace {

std::string csv(const Table& t, const ExperimentConfig& cfg) {
  std::ostringstream os;
  write_csv(os, t, csv_header(cfg));
  return os.str();
}

const char* kVerify = R"({"experiment": "verify", "ratios": [100], "orders": [1],
                          "mesh_sizes": [10, 20], "deterministic": true})";

}  // namespace

TEST_CASE("config parsing fills defaults and reads every section") {
  const auto c = ExperimentConfig::from_json_text(R"({
    "experiment": "efficiency",
    "model": {"kind": "single_null", "wire1": [0.4, 0.8], "direction": "total"},
    "ratios": [100, 1000], "orders": [1, 2],
    "strategies": ["uniform", {"kind": "zz_threshold", "threshold": 0.5}],
    "budget": {"max_dofs": 5000, "max_iterations": 7, "halt_size": 0.01},
    "reference": {"levels": [6, 7]},
    "solver": {"preconditioner": "jacobi", "rtol": 1e-8, "max_iterations": 50},
    "threads": 2, "output": "out", "seed": 9
  })");
  CHECK(c.kind == ExperimentKind::efficiency);
  CHECK(c.model.kind == FieldKind::single_null);
  CHECK(c.model.wire1->x == 0.4);
  CHECK(!c.model.wire2);
  CHECK(c.model.direction == DirectionMode::total);
  CHECK(c.ratios == std::vector<double>{100, 1000});
  REQUIRE(c.strategies.size() == 2);
  CHECK(c.strategies[1].threshold == 0.5);
  CHECK(c.budget.max_dofs == 5000);
  CHECK(c.budget.halt_size == 0.01);
  CHECK(c.reference_level(1) == 7);
  CHECK(c.solver.preconditioner == PreconditionerKind::jacobi);
  CHECK(c.threads == 2);
  CHECK(c.seed == 9);
  CHECK(!c.deterministic);
  const FieldModel m = c.model.build(100);
  CHECK(m.wire1().x == 0.4);
  CHECK(m.wire2().y == -0.25);
  CHECK(m.direction_mode() == DirectionMode::total);

  const auto d = ExperimentConfig::from_json_text(R"({"reference": {"levels": 5}})",
                                                  ExperimentKind::single_run);
  CHECK(d.reference_level(0) == 5);
  CHECK(d.output == "results");
}

TEST_CASE("config errors name the key") {
  auto message = [](const std::string& text) {
    try {
      ExperimentConfig::from_json_text(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("{").find("not valid JSON") != std::string::npos);
  CHECK(message("{}").find("experiment") != std::string::npos);
  CHECK(message(R"({"experiment": "bogus"})").find("bogus") != std::string::npos);
  CHECK(message(R"({"experiment": "verify", "ratio": [1]})").find("'ratio'") !=
        std::string::npos);
  CHECK(message(R"({"experiment": "verify", "ratios": "x"})").find("ratios") !=
        std::string::npos);
  CHECK(message(R"({"experiment": "verify", "ratios": []})").find("ratios") != std::string::npos);
  CHECK(message(R"({"experiment": "verify", "ratios": [1e5]})").find("max_ratio") !=
        std::string::npos);
  CHECK(message(R"({"experiment": "verify", "orders": [4]})").find("orders") !=
        std::string::npos);
  CHECK(message(R"({"experiment": "verify", "orders": [1.5]})").find("orders") !=
        std::string::npos);
  CHECK(message(R"({"experiment": "verify", "model": {"kind": "island"}})").find("constant") !=
        std::string::npos);
  CHECK(message(R"({"experiment": "run", "model": {"shape": 1}})").find("run") !=
        std::string::npos);
  CHECK(message(R"({"experiment": "single_run", "model": {"shape": 1}})").find("'shape'") !=
        std::string::npos);
  CHECK(message(R"({"experiment": "single_run", "ratios": [10, 100],
                    "reference": {"levels": [5, 6, 7]}})")
            .find("reference.levels") != std::string::npos);
  CHECK(message(R"({"experiment": "single_run", "strategies": [{"kind": "zz_threshold",
                    "threshold": 2}]})") != "no error");
  CHECK(message(R"({"experiment": "single_run", "wire1": [0, 1]})").find("'wire1'") !=
        std::string::npos);
  CHECK(message(R"({"experiment": "single_run", "model": {"wire1": [0]}})").find("wire1") !=
        std::string::npos);
  CHECK(message(R"({"experiment": "single_run", "threads": 0})").find("threads") !=
        std::string::npos);
  CHECK(message(R"({"experiment": "single_run", "deterministic": 1})").find("deterministic") !=
        std::string::npos);
  CHECK(message(R"({"experiment": "iterations", "model": {"kind": "island"}})")
            .find("ratio meshes") != std::string::npos);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"experiment": "verify"})",
                                                   ExperimentKind::scaling),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("csv header embeds version, config and substitutions") {
  const auto c = ExperimentConfig::from_json_text(kVerify);
  const auto h = csv_header(c);
  REQUIRE(h.size() >= 4);
  CHECK(h[0].find(kVersion) != std::string::npos);
  CHECK(h[0].find("schema 1") != std::string::npos);
  bool has_config = false, has_cap = false;
  for (const auto& l : h) {
    has_config = has_config || l.find("\"mesh_sizes\":[10,20]") != std::string::npos;
    has_cap = has_cap || l.find("capped at 10000") != std::string::npos;
  }
  CHECK(has_config);
  CHECK(has_cap);
}

TEST_CASE("verify sweep reports orders and is byte-reproducible") {
  const auto c = ExperimentConfig::from_json_text(kVerify);
  const Table t = run_verify(c);
  REQUIRE(t.rows.size() == 2);
  CHECK(std::isnan(t.number(0, "order")));
  CHECK(t.number(1, "order") > 1.0);
  CHECK(t.number(1, "layer_norm") < t.number(0, "layer_norm"));
  CHECK(t.number(1, "dofs") == 21 * 21);
  CHECK_THROWS(t.column("seconds"));
  CHECK(csv(t, c) == csv(run_verify(c), c));
}

TEST_CASE("efficiency traces carry halt reasons and read back") {
  const auto c = ExperimentConfig::from_json_text(R"({
    "experiment": "efficiency", "ratios": [100], "deterministic": true,
    "strategies": ["uniform", "aspect_ratio"], "sweep": [3, 6],
    "budget": {"max_dofs": 3000}})");
  const auto r = run_efficiency(c);
  REQUIRE(r.runs.size() == 2);
  CHECK(r.runs[1].trace.records.size() == 2);
  const Table& t = r.table;
  const std::size_t halt = t.column("halt");
  std::size_t halts = 0;
  for (const auto& row : t.rows) halts += !std::get<std::string>(row[halt]).empty();
  CHECK(halts == 2);
  CHECK(!std::isnan(t.number(0, "layer_norm")));
  CHECK(!std::isnan(t.number(0, "l1_error")));

  std::istringstream in(csv(t, c));
  const Table back = read_csv(in);
  CHECK(back.columns == t.columns);
  REQUIRE(back.rows.size() == t.rows.size());
  CHECK(back.number(2, "dofs") == t.number(2, "dofs"));
  CHECK(back.number(0, "h_min") == doctest::Approx(t.number(0, "h_min")).epsilon(1e-11));
  CHECK(format_value(back.rows[0][back.column("strategy")]) == "uniform");
  CHECK(csv(run_efficiency(c).table, c) == csv(t, c));
}

TEST_CASE("iteration study records every combination") {
  const auto c = ExperimentConfig::from_json_text(R"({
    "experiment": "iterations", "ratios": [100], "orders": [1],
    "iterations": {"meshes": ["uniform", "ratio", "fixed"], "fixed_size": 8}})");
  const Table t = run_iterations(c);
  REQUIRE(t.rows.size() == 6);
  CHECK(t.number(0, "mx") == 10);
  CHECK(t.number(2, "my") == 40);
  CHECK(t.number(4, "mx") == 8);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(t.number(i, "converged") == 1);
    CHECK(t.number(i, "condition") > 1.0);
    CHECK(t.number(i, "lambda_max") >= t.number(i, "lambda_min"));
  }
  CHECK(format_value(t.rows[1][t.column("preconditioner")]) == "ilu0");
}

TEST_CASE("scaling tables") {
  const auto c = ExperimentConfig::from_json_text(R"({
    "experiment": "scaling", "ratios": [100, 10000],
    "scaling": {"max_levels": 6, "dimensions": [2, 3]}})");
  const auto s = run_scaling(c);
  CHECK(s.counts.rows.size() == 2 * 4 * 6);
  const std::size_t exact = s.counts.column("exact");
  for (const auto& row : s.counts.rows) {
    const auto& v = std::get<std::string>(row[exact]);
    CHECK((v == "yes" || v.empty()));
  }
  REQUIRE(s.costs.rows.size() == 4);
  CHECK(s.costs.number(0, "cost_uniform") == doctest::Approx(1000.0));
  CHECK(s.costs.number(2, "cost_iso_amr") == doctest::Approx(1e4));
  CHECK(s.fits.columns.empty());
}

TEST_CASE("dof-trace fits") {
  Table t({"model", "ratio", "p", "strategy", "h_min", "dofs"});
  for (int k = 0; k < 5; ++k) {
    const double inv_h = std::ldexp(1.0, k + 2);
    t.add({std::string("m"), 100.0, std::int64_t{1}, std::string("uniform"), 1.0 / inv_h,
           3.0 * inv_h * inv_h});
    t.add({std::string("m"), 100.0, std::int64_t{1}, std::string("zz"), 1.0 / inv_h,
           7.0 * inv_h});
  }
  const Table f = fit_dof_traces(t, 4);
  REQUIRE(f.rows.size() == 2);
  CHECK(f.number(0, "beta") == doctest::Approx(2.0));
  CHECK(f.number(0, "prefactor") == doctest::Approx(3.0));
  CHECK(f.number(1, "beta") == doctest::Approx(1.0));
  CHECK(f.number(0, "points") == 4);
  // 1/w = 10 lies between 8 and 16.
  CHECK(f.number(0, "dofs_at_layer") == doctest::Approx(300.0));
  CHECK(f.number(1, "dofs_at_layer") == doctest::Approx(70.0));
}

TEST_CASE("run_experiment writes its files") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "aniso_test_experiments";
  fs::remove_all(dir);
  auto c = ExperimentConfig::from_json_text(R"({
    "experiment": "single_run", "model": {"kind": "island"}, "ratios": [20],
    "budget": {"max_iterations": 3}, "solver": {"preconditioner": "jacobi"}})");
  c.output = dir.string();
  const auto paths = run_experiment(c);
  REQUIRE(paths.size() == 2);
  CHECK(fs::exists(dir / "run.csv"));
  std::ifstream vtk(dir / "run.vtk");
  std::string first;
  std::getline(vtk, first);
  CHECK(first == "# vtk DataFile Version 3.0");
  std::ifstream in(dir / "run.csv");
  const Table t = read_csv(in);
  CHECK(t.rows.size() == 3);
  fs::remove_all(dir);
}

TEST_CASE("shipped configs parse") {
  namespace fs = std::filesystem;
  int n = 0;
  for (const auto& entry : fs::directory_iterator(ANISO_CONFIG_DIR)) {
    if (entry.path().extension() != ".json" || entry.path().filename() == "schema.json") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(ExperimentConfig::load(entry.path()));
    ++n;
  }
  CHECK(n >= 5);
}
