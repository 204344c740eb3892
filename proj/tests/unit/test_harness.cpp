#include <doctest.h>

#include "harness/config.hpp"
#include "harness/runner.hpp"
#include "harness/table.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>

using namespace torsionlab::harness;

namespace {

const char* kRadialIdentities = R"({
  "experiment": "identities",
  "field": "radial",
  "holes": [{"center": [0.0, 0.0], "radius": 0.1}],
  "quadrature": {"n_theta": 128, "n_r": 64},
  "sweep": {"axis": "hole_radius", "values": [0.1, 0.2, 0.4]}
})";

const char* kRadialStability = R"({
  "experiment": "stability",
  "field": "radial",
  "holes": [{"center": [0.0, 0.0], "radius": 0.05}],
  "stability": {"n_samples": 2000},
  "sweep": {"axis": "hole_radius", "values": [0.05, 0.1, 0.2]},
  "seed": 11
})";

std::string config_error_path(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

const Table& table(const RunOutcome& out, const std::string& name) {
  for (const auto& t : out.tables)
    if (t.name == name) return t;
  throw std::runtime_error("no table " + name);
}

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    if (t.columns[i].name == name) return i;
  throw std::runtime_error("no column " + name);
}

}  // namespace

TEST_SUITE("harness.config") {
  TEST_CASE("errors carry the offending field path") {
    CHECK(config_error_path("{") == "<document>");
    CHECK(config_error_path(R"({"field": "radial"})") == "experiment");
    CHECK(config_error_path(R"({"experiment": "nonsense"})") == "experiment");
    CHECK(config_error_path(R"({"experiment": "identities", "quadrature": {"nr": 3}})") == "quadrature.nr");
    CHECK(config_error_path(R"({"experiment": "identities", "quadrature": {"n_theta": 129}})") ==
          "quadrature.n_theta");
    CHECK(config_error_path(R"({"experiment": "identities", "holes": [{"center": [0, 0]}]})") ==
          "holes[0].radius");
    CHECK(config_error_path(R"({"experiment": "identities", "holes": [{"center": [0, 0], "radius": 0.1}]})") ==
          "holes[0].g");
  }
  TEST_CASE("a hole crossing Gamma names the clearance invariant") {
    try {
      parse_config(R"({"experiment": "identities", "holes": [{"center": [0.9, 0], "radius": 0.2, "g": -0.1}]})");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.path() == "holes[0]");
      CHECK(std::string(e.what()).find("clearance") != std::string::npos);
    }
  }
  TEST_CASE("sweep values must be non-empty, finite and increasing") {
    const std::string head = R"({"experiment": "identities", "field": "radial",
      "holes": [{"center": [0, 0], "radius": 0.1}], "sweep": {"axis": "hole_radius", "values": )";
    CHECK(config_error_path(head + "[]}}") == "sweep.values");
    CHECK(config_error_path(head + "[0.2, 0.1]}}") == "sweep.values[1]");
    // Each sweep instance is validated: a radius of 1.5 leaves Gamma.
    CHECK(config_error_path(head + "[0.1, 1.5]}}") == "sweep.values[1]");
  }
  TEST_CASE("radial field fills the closed-form hole data and rejects inconsistent data") {
    const ScenarioConfig cfg = parse_config(kRadialIdentities);
    REQUIRE(cfg.domain.holes[0].g);
    CHECK(*cfg.domain.holes[0].g == doctest::Approx((0.01 - 1.0) / 4.0));
    CHECK(config_error_path(R"({"experiment": "identities", "field": "radial",
      "holes": [{"center": [0, 0], "radius": 0.1, "g": -0.1}]})") == "holes[0].g");
    CHECK(config_error_path(R"({"experiment": "identities", "field": "radial",
      "holes": [{"center": [0.1, 0], "radius": 0.1}]})") == "holes[0].center");
  }
  TEST_CASE("invalid Poincare exponents are a configuration error") {
    CHECK(config_error_path(R"({"experiment": "poincare", "poincare": {"r": 4, "p": 2, "alpha": 0}})") ==
          "poincare");
  }
  TEST_CASE("sweep command requires a sweep block") {
    const ScenarioConfig cfg = parse_config(R"({"experiment": "identities", "field": "radial"})");
    CHECK_THROWS_AS(execute(cfg, Mode::kSweep), ConfigError);
  }
}

TEST_SUITE("harness.tables") {
  TEST_CASE("numbers round-trip in shortest form") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) {
      const std::string s = format_double(v);
      CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(INFINITY) == "inf");
  }
  TEST_CASE("cells with commas are quoted") {
    Table t{"x", {{"a", "", ""}, {"b", "", ""}}, {}};
    t.add({1.5, std::string("p;q,r")});
    CHECK(t.csv() == "a,b\n1.5,\"p;q,r\"\n");
    CHECK_THROWS(t.add({1.0}));
  }
}

TEST_SUITE("harness.run") {
  TEST_CASE("radial identities sweep passes with residuals at 1e-8") {
    const RunOutcome out = execute(parse_config(kRadialIdentities), Mode::kSweep);
    CHECK(out.exit_code() == 0);
    const Table& t = table(out, "identities");
    CHECK(t.rows.size() == 15);
    const std::size_t rel = column(t, "rel_residual");
    for (const auto& row : t.rows) CHECK(std::get<double>(row[rel]) <= 1e-8);
  }
  TEST_CASE("run ignores the sweep and executes the base instance") {
    const RunOutcome out = execute(parse_config(kRadialIdentities), Mode::kRun);
    CHECK(table(out, "identities").rows.size() == 5);
    CHECK(out.report["mode"] == "run");
  }
  TEST_CASE("stability sweep: radial family has zero left-hand sides and fitted constants") {
    const RunOutcome out = execute(parse_config(kRadialStability), Mode::kSweep, RunOptions{3});
    CHECK(out.exit_code() == 0);
    const Table& t = table(out, "stability");
    for (const auto& row : t.rows) {
      CHECK(std::get<bool>(row[column(t, "valid")]));
      CHECK(std::get<double>(row[column(t, "pseudo_distance")]) <= 1e-10);
      CHECK(std::get<double>(row[column(t, "asymmetry")]) <= 1e-6);
      CHECK(std::get<double>(row[column(t, "rho_gap")]) <= 1e-8);
    }
    const Table& f = table(out, "fitted");
    for (const auto& row : f.rows) CHECK(std::get<double>(row[column(f, "c_hat")]) <= 1e-6);
  }
  TEST_CASE("outputs are independent of the thread count") {
    const ScenarioConfig cfg = parse_config(kRadialStability);
    const RunOutcome a = execute(cfg, Mode::kSweep, RunOptions{1});
    const RunOutcome b = execute(cfg, Mode::kSweep, RunOptions{3});
    REQUIRE(a.tables.size() == b.tables.size());
    for (std::size_t i = 0; i < a.tables.size(); ++i) CHECK(a.tables[i].csv() == b.tables[i].csv());
  }
  TEST_CASE("every instance failing its hypotheses is a numeric failure") {
    // Dirichlet field on a perturbed domain: u_nu is not constant on Gamma.
    const RunOutcome out = execute(parse_config(R"({
      "experiment": "stability",
      "domain": {"fourier_modes": [{"k": 3, "cos": 0.05}]},
      "holes": [{"center": [0.3, 0.0], "radius": 0.1, "g": -0.1}],
      "stability": {"n_samples": 500}
    })"), Mode::kRun);
    CHECK(out.exit_code() == 1);
    CHECK(out.failures.front().find("every instance failed") != std::string::npos);
    const Table& t = table(out, "stability");
    CHECK_FALSE(std::get<bool>(t.rows.at(0)[column(t, "valid")]));
  }
  TEST_CASE("shapeflow trajectory has a non-increasing spread column") {
    const RunOutcome out = execute(parse_config(R"({
      "experiment": "shapeflow",
      "domain": {"fourier_modes": [{"k": 3, "cos": 0.05}]}
    })"), Mode::kRun);
    CHECK(out.exit_code() == 0);
    const Table& t = table(out, "trajectory");
    const std::size_t c = column(t, "std_u_nu");
    REQUIRE(t.rows.size() >= 2);
    for (std::size_t i = 1; i < t.rows.size(); ++i)
      CHECK(std::get<double>(t.rows[i][c]) <= std::get<double>(t.rows[i - 1][c]));
  }
}
