#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spslab/domain.hpp"
#include "spslab/measure.hpp"
#include "spslab/scalar.hpp"

namespace spslab {

enum class ArithmeticMode { kFloat64, kRational };

enum class CheckKind {
  kDualOracle,
  kIdentities,
  kShapes,
  kOleinik,
  kConfinementEquivalence,
  kFlowIdentity,
};

std::string to_string(ArithmeticMode mode);
std::string to_string(CheckKind kind);
std::optional<ArithmeticMode> arithmetic_from_string(const std::string& s);
std::optional<CheckKind> check_from_string(const std::string& s);

/// Invalid input of any kind: unreadable file, malformed JSON, schema or
/// invariant violations. Maps to exit code 2.
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One experiment description. Values are stored exactly as rationals in both
/// arithmetic modes (doubles embed losslessly); the mode picks the scalar type
/// the dynamics run in.
struct Scenario {
  std::string name;
  ArithmeticMode arithmetic = ArithmeticMode::kFloat64;
  std::vector<Atom<Rational>> atoms;
  Domain<Rational> domain = Domain<Rational>::real_line();
  std::optional<Rational> horizon;
  std::vector<Rational> times;  // explicit query times; empty means auto grid
  std::vector<CheckKind> checks;
  std::uint64_t seed = 0;
};

/// Parses and validates a scenario document, reporting every violation at
/// once. `context` labels error messages (normally the file path).
Scenario parse_scenario(const std::string& text, const std::string& context);
Scenario load_scenario(const std::string& path);

struct CheckOutcome {
  std::string name;
  std::string status;  // pass | fail | not_applicable | divergent
  double worst;        // decisive scalar; pass means worst <= tolerance
  double tolerance;
  std::string detail;
  bool passed;  // false only for status == fail
};

struct ResultBundle {
  std::string document;  // result JSON with deterministic formatting
  std::string series_csv;
  std::vector<CheckOutcome> outcomes;
  bool all_passed = true;
  std::string summary_row;
};

/// Simulates the scenario, evaluates the requested checks and assembles the
/// bundle. A tolerance override replaces every per-check default.
ResultBundle run_scenario(const Scenario& scenario,
                          std::optional<double> tolerance_override = std::nullopt);

/// Writes stem.result.json and stem.series.csv, each atomically.
void write_bundle_files(const ResultBundle& bundle, const std::string& stem);
void write_text_atomic(const std::string& path, const std::string& text);

/// Fixed-width float formatting used in every artifact: 17 significant digits,
/// non-finite values as "nan"/"inf".
std::string format_float(double x);

/// Rebuilds the one-line summary from a result document; running it on a
/// freshly written bundle reproduces bundle.summary_row exactly.
std::string summary_row_from_document(const std::string& document, const std::string& file);
std::string summary_header();

struct BatchSummary {
  std::string table;  // header plus one row per scenario, sorted by file name
  std::size_t total = 0;
  std::size_t check_failures = 0;
  std::size_t input_errors = 0;
  bool all_passed = true;
};

/// Runs every "*.json" scenario under `directory` (bundles written alongside
/// the inputs), up to `jobs` at a time. The summary is independent of
/// execution order; failures do not stop the remaining scenarios.
BatchSummary run_batch(const std::string& directory, std::size_t jobs,
                       std::optional<double> tolerance_override = std::nullopt);

std::string rational_to_string(const Rational& r);
/// Accepts "p" or "p/q" with integer p, positive integer q.
std::optional<Rational> rational_from_string(const std::string& s);

}  // namespace spslab
