#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#ifdef __unix__
#include <sys/wait.h>
#endif

#include "spslab/scenario.hpp"

using namespace spslab;
namespace fs = std::filesystem;

namespace {

std::string minimal_doc(const std::string& extra = "") {
  return R"({
  "name": "pair",
  "arithmetic": "float64",
  "atoms": [
    {"m": 0.5, "x": -0.25, "v": 1.0},
    {"m": 0.5, "x": 0.25, "v": -1.0}
  ],
  "domain": {"kind": "line"},
  "checks": ["dual_oracle", "identities"])" +
         extra + "\n}";
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("spslab-test-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void copy_fixture(const std::string& name, const fs::path& dir) {
  fs::copy_file(fs::path(SPSLAB_SCENARIO_DIR) / name, dir / name);
}

}  // namespace

TEST_CASE("a well-formed scenario parses") {
  const auto s = parse_scenario(minimal_doc(), "test");
  CHECK(s.name == "pair");
  CHECK(s.arithmetic == ArithmeticMode::kFloat64);
  REQUIRE(s.atoms.size() == 2);
  CHECK(s.atoms[0].mass == Rational(1, 2));
  CHECK(s.atoms[0].position == Rational(-1, 4));
  CHECK(s.domain.is_real_line());
  CHECK_FALSE(s.horizon.has_value());
  REQUIRE(s.checks.size() == 2);
  CHECK(s.checks[0] == CheckKind::kDualOracle);
}

TEST_CASE("malformed scenarios are rejected with labelled messages") {
  auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      parse_scenario(text, "doc");
      FAIL_CHECK("expected rejection: " << needle);
    } catch (const ScenarioError& e) {
      INFO(e.what());
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  expect_error("{ not json", "doc");
  expect_error(R"({"arithmetic": "float64", "atoms": [{"m": 1, "x": 0, "v": 0}],
                   "domain": {"kind": "line"}, "checks": []})",
               "name");
  expect_error(minimal_doc(R"(, "arithmetic2": 1)"), "arithmetic2");

  // a zero mass names the offending atom
  std::string zero_mass = minimal_doc();
  const auto at = zero_mass.find("0.5");
  zero_mass.replace(at, 3, "0.0");
  expect_error(zero_mass, "atoms[0]");

  std::string bad_sum = minimal_doc();
  bad_sum.replace(bad_sum.find("0.5"), 3, "0.4");
  expect_error(bad_sum, "sum");

  expect_error(R"({"name": "x", "arithmetic": "float32", "atoms":
    [{"m": 1, "x": 0, "v": 0}], "domain": {"kind": "line"}, "checks": []})",
               "arithmetic");

  // rational mode refuses binary floats
  expect_error(R"({"name": "x", "arithmetic": "rational", "atoms":
    [{"m": 1.0, "x": 0.1, "v": 0}], "domain": {"kind": "line"}, "checks": []})",
               "rational");

  // confinement comparisons need a wall; line-only checks reject walls
  expect_error(R"({"name": "x", "arithmetic": "float64", "atoms":
    [{"m": 1, "x": 0, "v": 0}], "domain": {"kind": "line"},
    "checks": ["confinement_equivalence"]})",
               "confinement_equivalence");
  expect_error(R"({"name": "x", "arithmetic": "float64", "atoms":
    [{"m": 1, "x": 0.5, "v": 0}], "domain": {"kind": "interval", "a": 0, "b": 1},
    "checks": ["dual_oracle"]})",
               "dual_oracle");

  // atom outside the domain closure
  expect_error(R"({"name": "x", "arithmetic": "float64", "atoms":
    [{"m": 1, "x": 2, "v": 0}], "domain": {"kind": "interval", "a": 0, "b": 1},
    "checks": []})",
               "domain");
}

TEST_CASE("rational strings parse exactly") {
  CHECK(rational_from_string("3/4") == Rational(3, 4));
  CHECK(rational_from_string("-1/2") == Rational(-1, 2));
  CHECK(rational_from_string("7") == Rational(7));
  CHECK(rational_from_string("-0") == Rational(0));
  CHECK_FALSE(rational_from_string("1/0").has_value());
  CHECK_FALSE(rational_from_string("a/b").has_value());
  CHECK_FALSE(rational_from_string("1/-2").has_value());
  CHECK_FALSE(rational_from_string("").has_value());
  CHECK_FALSE(rational_from_string("1.5").has_value());
  CHECK(rational_to_string(Rational(-3, 6)) == "-1/2");
  CHECK(rational_to_string(Rational(4)) == "4");
}

TEST_CASE("floats are printed with 17 significant digits") {
  CHECK(format_float(0.1) == "0.10000000000000001");
  CHECK(format_float(1.0 / 3.0) == "0.33333333333333331");
  CHECK(format_float(1.0) == "1");
  CHECK(format_float(-0.0625) == "-0.0625");
  CHECK(format_float(std::nan("")) == "nan");
  CHECK(format_float(-std::numeric_limits<double>::infinity()) == "-inf");
  // round trip
  CHECK(std::stod(format_float(0.1)) == 0.1);
}

TEST_CASE("running a scenario produces a deterministic bundle") {
  const auto s = parse_scenario(minimal_doc(), "test");
  const auto first = run_scenario(s);
  const auto second = run_scenario(s);
  CHECK(first.document == second.document);
  CHECK(first.series_csv == second.series_csv);
  CHECK(first.all_passed);
  REQUIRE(first.outcomes.size() == 2);
  CHECK(first.outcomes[0].status == "pass");
  CHECK(first.outcomes[1].status == "pass");
  CHECK(first.series_csv.rfind("t,e,theta,metric_derivative,energy,n_clusters", 0) == 0);
  CHECK(summary_row_from_document(first.document, "") == first.summary_row);
}

TEST_CASE("shipped fixtures load and run") {
  const fs::path dir(SPSLAB_SCENARIO_DIR);
  const auto quartet = load_scenario((dir / "confined_quartet.json").string());
  CHECK(quartet.arithmetic == ArithmeticMode::kRational);
  const auto bundle = run_scenario(quartet);
  CHECK(bundle.all_passed);
  // rational wall run reproduces the engine exactly
  for (const auto& outcome : bundle.outcomes)
    if (outcome.name == "confinement_equivalence") CHECK(outcome.worst == 0.0);
  // exact inputs echo as fraction strings
  CHECK(bundle.document.find("\"1/4\"") != std::string::npos);

  const auto drift = load_scenario((dir / "delta_drift.json").string());
  const auto drift_bundle = run_scenario(drift);
  CHECK(drift_bundle.all_passed);
  bool saw_divergent = false;
  for (const auto& outcome : drift_bundle.outcomes)
    if (outcome.status == "divergent") saw_divergent = true;
  CHECK(saw_divergent);
}

TEST_CASE("missing files raise input errors") {
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), ScenarioError);
}

TEST_CASE("checks are deduplicated into a canonical order") {
  const auto s = parse_scenario(R"({
    "name": "x", "arithmetic": "float64",
    "atoms": [{"m": 1, "x": 0, "v": 0}],
    "domain": {"kind": "line"},
    "checks": ["oleinik", "dual_oracle", "oleinik", "identities"]})",
                                "test");
  REQUIRE(s.checks.size() == 3);
  CHECK(s.checks[0] == CheckKind::kDualOracle);
  CHECK(s.checks[1] == CheckKind::kIdentities);
  CHECK(s.checks[2] == CheckKind::kOleinik);
}

TEST_CASE("explicit query times land in the series") {
  const auto s = parse_scenario(minimal_doc(R"(, "horizon": 2, "times": [0, 0.125, 1])"),
                                "test");
  const auto bundle = run_scenario(s);
  CHECK(bundle.series_csv.find("\n0.125,") != std::string::npos);
  const auto lines = std::count(bundle.series_csv.begin(), bundle.series_csv.end(), '\n');
  CHECK(lines == 4);  // header + three rows
}

TEST_CASE("a horizon before the last event leaves checks not applicable") {
  const auto s = parse_scenario(minimal_doc(R"(, "horizon": 0.125)"), "test");
  const auto bundle = run_scenario(s);
  CHECK(bundle.all_passed);
  bool saw_na = false;
  for (const auto& outcome : bundle.outcomes)
    if (outcome.name == "identities") {
      CHECK(outcome.status == "not_applicable");
      saw_na = true;
    }
  CHECK(saw_na);
}

TEST_CASE("bundles round trip through the filesystem") {
  TempDir tmp;
  const auto s = parse_scenario(minimal_doc(), "test");
  const auto bundle = run_scenario(s);
  const auto stem = (tmp.path / "pair").string();
  write_bundle_files(bundle, stem);
  CHECK(read_file(stem + ".result.json") == bundle.document);
  CHECK(read_file(stem + ".series.csv") == bundle.series_csv);
  CHECK(summary_row_from_document(read_file(stem + ".result.json"), "pair.json") ==
        summary_row_from_document(bundle.document, "pair.json"));
}

TEST_CASE("batch runs a directory and summarizes") {
  TempDir tmp;
  copy_fixture("symmetric_pair.json", tmp.path);
  copy_fixture("confined_quartet.json", tmp.path);
  copy_fixture("wall_single.json", tmp.path);
  {
    std::ofstream bad(tmp.path / "broken.json");
    bad << "{ not json";
  }

  const auto summary = run_batch(tmp.path.string(), 2);
  CHECK(summary.total == 4);
  CHECK(summary.input_errors == 1);
  CHECK(summary.check_failures == 0);
  CHECK_FALSE(summary.all_passed);
  CHECK(summary.table.rfind(summary_header(), 0) == 0);
  CHECK(summary.table.find("broken.json,-,-,error") != std::string::npos);
  CHECK(summary.table.find("symmetric_pair.json,symmetric_pair,float64,ok") !=
        std::string::npos);
  CHECK(fs::exists(tmp.path / "symmetric_pair.result.json"));
  CHECK(fs::exists(tmp.path / "confined_quartet.series.csv"));

  // deterministic regardless of worker count; result files are not re-consumed
  const auto again = run_batch(tmp.path.string(), 1);
  CHECK(again.table == summary.table);
  CHECK(again.total == 4);
}

TEST_CASE("batch refuses duplicate scenario names") {
  TempDir tmp;
  copy_fixture("symmetric_pair.json", tmp.path);
  fs::copy_file(tmp.path / "symmetric_pair.json", tmp.path / "copy.json");
  CHECK_THROWS_AS(run_batch(tmp.path.string(), 1), ScenarioError);
}

#ifdef SPSLAB_CLI_PATH
TEST_CASE("the command line tool honors the exit code contract") {
  if (!fs::exists(SPSLAB_CLI_PATH)) return;
  TempDir tmp;
  const auto scenario = tmp.path / "pair.json";
  {
    std::ofstream out(scenario);
    out << minimal_doc();
  }
  const std::string base = std::string(SPSLAB_CLI_PATH);
  const auto quiet = " > " + (tmp.path / "stdout.txt").string() + " 2>&1";
  CHECK(std::system((base + " simulate " + scenario.string() + quiet).c_str()) == 0);
  {
    std::ofstream out(scenario);
    out << "{ not json";
  }
  const int bad = std::system((base + " simulate " + scenario.string() + quiet).c_str());
  CHECK(WEXITSTATUS(bad) == 2);
  const int missing =
      std::system((base + " simulate " + (tmp.path / "nope.json").string() + quiet).c_str());
  CHECK(WEXITSTATUS(missing) == 2);
}
#endif
