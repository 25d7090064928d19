#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spslab/asymptotics.hpp"
#include "spslab/bombardment.hpp"
#include "spslab/lagrangian_solver.hpp"
#include "spslab/particle_engine.hpp"
#include "spslab/scenario.hpp"
#include "spslab/step_function.hpp"

namespace {

using spslab::ArithmeticMode;
using spslab::Rational;
using spslab::Scenario;
using spslab::ScenarioError;

template <class T>
T cli_cast(const Rational& r) {
  if constexpr (std::is_same_v<T, double>)
    return spslab::to_double(r);
  else
    return r;
}

template <class T>
std::string emit(const T& value) {
  if constexpr (std::is_same_v<T, double>)
    return spslab::format_float(value);
  else
    return "\"" + spslab::rational_to_string(value) + "\"";
}

template <class T>
spslab::Domain<T> cli_domain(const spslab::Domain<Rational>& d) {
  if (d.is_real_line()) return spslab::Domain<T>::real_line();
  std::vector<spslab::DomainComponent<T>> comps;
  for (const auto& c : d.components()) {
    spslab::DomainComponent<T> out;
    if (c.lower) out.lower = cli_cast<T>(*c.lower);
    if (c.upper) out.upper = cli_cast<T>(*c.upper);
    comps.push_back(std::move(out));
  }
  return spslab::Domain<T>::union_of(std::move(comps));
}

Rational parse_scalar_arg(const std::string& text, const char* what) {
  if (auto r = spslab::rational_from_string(text)) return *r;
  try {
    std::size_t used = 0;
    const double d = std::stod(text, &used);
    if (used == text.size() && std::isfinite(d)) return Rational(d);
  } catch (const std::exception&) {
  }
  throw ScenarioError(std::string(what) + ": cannot parse \"" + text + "\" as a number");
}

struct Overrides {
  std::string arithmetic;
  std::string horizon;
  double tolerance = -1.0;
  std::uint64_t seed = 0;
  bool seed_set = false;

  void apply(Scenario& scenario) const {
    if (!arithmetic.empty()) {
      const auto mode = spslab::arithmetic_from_string(arithmetic);
      if (!mode)
        throw ScenarioError("--arithmetic must be float64 or rational, got \"" +
                            arithmetic + "\"");
      scenario.arithmetic = *mode;
    }
    if (!horizon.empty()) {
      const Rational h = parse_scalar_arg(horizon, "--horizon");
      if (!(h > 0)) throw ScenarioError("--horizon must be positive");
      scenario.horizon = h;
    }
    if (seed_set) scenario.seed = seed;
  }
  std::optional<double> tolerance_override() const {
    if (tolerance < 0) return std::nullopt;
    return tolerance;
  }
};

void add_override_flags(CLI::App* sub, Overrides& ov, CLI::Option*& seed_opt) {
  sub->add_option("--arithmetic", ov.arithmetic, "Override arithmetic: float64|rational");
  sub->add_option("--horizon", ov.horizon, "Override simulation horizon");
  sub->add_option("--tolerance", ov.tolerance, "Override every check tolerance");
  seed_opt = sub->add_option("--seed", ov.seed, "Override the recorded seed");
}

std::string default_stem(const std::string& path) {
  std::string stem = path;
  if (stem.size() > 5 && stem.substr(stem.size() - 5) == ".json")
    stem.erase(stem.size() - 5);
  return stem;
}

void deliver(const std::string& text, const std::string& out) {
  if (out.empty())
    std::cout << text;
  else
    spslab::write_text_atomic(out, text);
}

int report_bundle(const spslab::ResultBundle& bundle, const std::string& stem) {
  spslab::write_bundle_files(bundle, stem);
  std::cout << spslab::summary_header() << "\n"
            << bundle.summary_row << "\n";
  for (const auto& outcome : bundle.outcomes) {
    std::cout << "  " << outcome.name << ": " << outcome.status
              << " (worst=" << spslab::format_float(outcome.worst)
              << ", tolerance=" << spslab::format_float(outcome.tolerance) << ")";
    if (!outcome.detail.empty()) std::cout << " " << outcome.detail;
    std::cout << "\n";
  }
  std::cout << "wrote " << stem << ".result.json and " << stem << ".series.csv\n";
  return bundle.all_passed ? 0 : 1;
}

template <class T>
std::string project_json(const Scenario& scenario, const Rational& time) {
  std::vector<spslab::Atom<T>> atoms;
  for (const auto& a : scenario.atoms)
    atoms.push_back({cli_cast<T>(a.mass), cli_cast<T>(a.position), cli_cast<T>(a.velocity)});
  const spslab::DiscreteMeasure<T> measure(atoms);
  const auto sol = spslab::LagrangianSolution<T>::from_measure(measure);
  const auto q = spslab::solve_quantile(sol, cli_cast<T>(time));
  std::string out = "{\n  \"t\": " + emit(cli_cast<T>(time)) + ",\n  \"breakpoints\": [";
  for (std::size_t i = 0; i < q.breakpoints().size(); ++i) {
    if (i) out += ", ";
    out += spslab::format_float(spslab::to_double(q.breakpoints()[i]));
  }
  out += "],\n  \"values\": [";
  for (std::size_t i = 0; i < q.values().size(); ++i) {
    if (i) out += ", ";
    out += emit(q.values()[i]);
  }
  out += "]\n}\n";
  return out;
}

template <class T>
std::string limits_json(const Scenario& scenario) {
  std::vector<spslab::Atom<T>> atoms;
  for (const auto& a : scenario.atoms)
    atoms.push_back({cli_cast<T>(a.mass), cli_cast<T>(a.position), cli_cast<T>(a.velocity)});
  std::optional<T> horizon;
  if (scenario.horizon) horizon = cli_cast<T>(*scenario.horizon);
  const auto log = spslab::simulate<T>(atoms, cli_domain<T>(scenario.domain), horizon);
  if (!log.complete())
    throw ScenarioError(scenario.name + ": horizon truncates the run before equilibrium");
  const auto lim = spslab::limit_profile(log);
  std::string out = "{\n  \"diverges\": ";
  out += lim.diverges ? "true" : "false";
  if (!lim.diverges && lim.profile) {
    out += ",\n  \"equilibrium_time\": " + emit(lim.profile->equilibrium_time);
    out += ",\n  \"atoms\": [";
    const auto& limit_atoms = lim.profile->limit_measure.atoms();
    for (std::size_t i = 0; i < limit_atoms.size(); ++i) {
      if (i) out += ", ";
      out += "{\"m\": " + emit(limit_atoms[i].mass) +
             ", \"x\": " + emit(limit_atoms[i].position) + "}";
    }
    out += "]";
  }
  out += "\n}\n";
  return out;
}

template <class T>
int run_bombard(std::int64_t base, const std::string& spec_path, std::size_t count,
                std::vector<std::size_t> window, std::size_t engine_count,
                double engine_tolerance, const std::string& out_stem) {
  spslab::BombardmentRun<T> run;
  std::string family_json;
  bool geometric = spec_path.empty();
  if (geometric) {
    const auto family = spslab::GeometricBombardment<T>::speed_base(base);
    run = spslab::run_recursion(family, count);
    family_json = "{\"kind\": \"geometric\", \"base\": " + std::to_string(base) + "}";
  } else {
    std::ifstream in(spec_path, std::ios::binary);
    if (!in) throw ScenarioError(spec_path + ": cannot open file");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ScenarioError(spec_path + ": " + e.what());
    }
    spslab::ExplicitBombardment<T> spec;
    const auto read_list = [&](const char* key, std::vector<T>& target) {
      if (!doc.contains(key) || !doc.at(key).is_array())
        throw ScenarioError(spec_path + ": needs array \"" + key + "\"");
      for (const auto& v : doc.at(key)) {
        if (v.is_string()) {
          const auto r = spslab::rational_from_string(v.get<std::string>());
          if (!r) throw ScenarioError(spec_path + ": bad fraction in \"" + key + "\"");
          target.push_back(cli_cast<T>(*r));
        } else if (v.is_number()) {
          target.push_back(cli_cast<T>(Rational(v.get<double>())));
        } else {
          throw ScenarioError(spec_path + ": entries of \"" + key +
                              "\" must be numbers or \"p/q\" strings");
        }
      }
    };
    read_list("positions", spec.positions);
    read_list("masses", spec.masses);
    read_list("speeds", spec.speeds);
    std::vector<T> tail;
    read_list("tail_mass", tail);
    read_list("tail_momentum", tail);
    if (tail.size() != 2)
      throw ScenarioError(spec_path + ": \"tail_mass\"/\"tail_momentum\" must be 1-element arrays");
    spec.tail_mass = tail[0];
    spec.tail_momentum = tail[1];
    try {
      run = spslab::run_recursion(spec);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(spec_path + ": " + e.what());
    }
    count = spec.speeds.size();
    family_json = "{\"kind\": \"explicit\"}";
  }

  std::size_t lo = window[0], hi = std::min(window[1], count);
  if (lo >= hi) throw ScenarioError("--window needs lo < hi within the collision count");
  std::vector<double> times, gaps;
  for (std::size_t k = 0; k <= count; ++k) {
    times.push_back(spslab::to_double(run.times[k]));
    gaps.push_back(spslab::to_double(run.gaps[k]));
  }
  const auto fit = spslab::fit_decay_exponent(times, gaps, lo, hi);

  std::string engine_json = "null";
  if (geometric && engine_count > 0) {
    const auto family = spslab::GeometricBombardment<T>::speed_base(base);
    const auto check = spslab::cross_validate_with_engine(
        family, std::min(engine_count, count), engine_tolerance);
    engine_json = "{\"events_checked\": " + std::to_string(std::min(engine_count, count)) +
                  ", \"max_time_error\": " + spslab::format_float(check.max_time_error) +
                  ", \"max_point_error\": " + spslab::format_float(check.max_point_error) +
                  ", \"max_speed_error\": " + spslab::format_float(check.max_speed_error) +
                  ", \"ok\": " + (check.ok ? "true" : "false") + "}";
    if (!check.ok) {
      std::cerr << "engine cross-validation mismatch at event "
                << (check.first_mismatch ? std::to_string(*check.first_mismatch) : "?")
                << "\n";
    }
  }

  std::string doc = "{\n";
  doc += "  \"family\": " + family_json + ",\n";
  doc += "  \"count\": " + std::to_string(count) + ",\n";
  doc += "  \"initial_speed\": " + emit(run.initial_speed) + ",\n";
  doc += "  \"limit_point\": " + emit(run.limit_point) + ",\n";
  doc += "  \"limit_point_error\": " + emit(run.limit_point_error) + ",\n";
  doc += "  \"momentum_residual\": " + spslab::format_float(run.momentum_residual) + ",\n";
  doc += "  \"first_steps\": {\"v1\": " + emit(run.speeds[std::min<std::size_t>(1, count)]) +
         ", \"t1\": " + emit(run.times[std::min<std::size_t>(1, count)]) +
         ", \"y1\": " + emit(run.points[std::min<std::size_t>(1, count)]) + "},\n";
  doc += "  \"decay\": {\"exponent\": " + spslab::format_float(fit.exponent) +
         ", \"window\": [" + std::to_string(lo) + ", " + std::to_string(hi) +
         "], \"max_log_residual\": " + spslab::format_float(fit.max_log_residual) + "},\n";
  doc += "  \"engine\": " + engine_json + "\n";
  doc += "}\n";

  std::string csv = "k,t,y,v,e,tail\n";
  for (std::size_t k = 0; k <= count; ++k) {
    csv += std::to_string(k);
    csv += "," + spslab::format_float(spslab::to_double(run.times[k]));
    csv += "," + spslab::format_float(spslab::to_double(run.points[k]));
    csv += "," + spslab::format_float(spslab::to_double(run.speeds[k]));
    csv += "," + spslab::format_float(spslab::to_double(run.gaps[k]));
    csv += "," + spslab::format_float(spslab::to_double(run.gap_tails[k]));
    csv += "\n";
  }

  if (out_stem.empty()) {
    std::cout << doc;
  } else {
    spslab::write_text_atomic(out_stem + ".bombard.json", doc);
    spslab::write_text_atomic(out_stem + ".bombard.csv", csv);
    std::cout << doc;
    std::cout << "wrote " << out_stem << ".bombard.json and " << out_stem
              << ".bombard.csv\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sticky particle dynamics lab: event engine, cone projection, diagnostics"};
  app.require_subcommand(1);
  int exit_code = 0;

  Overrides ov;
  CLI::Option* seed_opt = nullptr;

  std::string scenario_path, out_path, time_arg;

  auto* simulate = app.add_subcommand("simulate", "Run a scenario and its checks");
  simulate->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  simulate->add_option("--out", out_path, "Output stem (default: scenario path)");
  add_override_flags(simulate, ov, seed_opt);
  simulate->callback([&] {
    Scenario s = spslab::load_scenario(scenario_path);
    ov.seed_set = seed_opt->count() > 0;
    ov.apply(s);
    const auto bundle = spslab::run_scenario(s, ov.tolerance_override());
    exit_code = report_bundle(bundle, out_path.empty() ? default_stem(scenario_path)
                                                       : out_path);
  });

  auto* project = app.add_subcommand("project", "One-shot cone projection at a time");
  project->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  project->add_option("--time", time_arg, "Evaluation time")->required();
  project->add_option("--out", out_path, "Output file (default: stdout)");
  add_override_flags(project, ov, seed_opt);
  project->callback([&] {
    Scenario s = spslab::load_scenario(scenario_path);
    ov.seed_set = seed_opt->count() > 0;
    ov.apply(s);
    if (!s.domain.is_real_line())
      throw ScenarioError("project is defined on the full line only");
    const Rational t = parse_scalar_arg(time_arg, "--time");
    if (t < 0) throw ScenarioError("--time must be nonnegative");
    deliver(s.arithmetic == ArithmeticMode::kFloat64 ? project_json<double>(s, t)
                                                     : project_json<Rational>(s, t),
            out_path);
  });

  auto* limits = app.add_subcommand("limits", "Long-time limit of a scenario");
  limits->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  limits->add_option("--out", out_path, "Output file (default: stdout)");
  add_override_flags(limits, ov, seed_opt);
  limits->callback([&] {
    Scenario s = spslab::load_scenario(scenario_path);
    ov.seed_set = seed_opt->count() > 0;
    ov.apply(s);
    deliver(s.arithmetic == ArithmeticMode::kFloat64 ? limits_json<double>(s)
                                                     : limits_json<Rational>(s),
            out_path);
  });

  auto* identities = app.add_subcommand("identities", "Evaluate the identity suite");
  identities->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  identities->add_option("--out", out_path, "Output stem (default: scenario path)");
  add_override_flags(identities, ov, seed_opt);
  identities->callback([&] {
    Scenario s = spslab::load_scenario(scenario_path);
    ov.seed_set = seed_opt->count() > 0;
    ov.apply(s);
    s.checks = {spslab::CheckKind::kIdentities, spslab::CheckKind::kShapes};
    const auto bundle = spslab::run_scenario(s, ov.tolerance_override());
    exit_code = report_bundle(bundle, out_path.empty() ? default_stem(scenario_path)
                                                       : out_path);
  });

  std::int64_t base = 2;
  std::string spec_path, bombard_arithmetic = "rational";
  std::size_t count = 60, engine_count = 24;
  std::vector<std::size_t> window{20, 60};
  double engine_tolerance = -1.0;

  auto* bombard = app.add_subcommand("bombard", "Collision cascade against a resting family");
  bombard->add_option("--base", base, "Incoming speed base n (speeds n^-k)")
      ->check(CLI::Range(std::int64_t(2), std::int64_t(1) << 20));
  bombard->add_option("--spec", spec_path, "Explicit truncated family JSON");
  bombard->add_option("--count", count, "Number of collisions")->check(CLI::PositiveNumber);
  bombard->add_option("--window", window, "Fit window [lo, hi] over collision index")
      ->expected(2)->delimiter(',');
  bombard->add_option("--engine-count", engine_count,
                      "Collisions to replay through the event engine (0 skips)");
  bombard->add_option("--arithmetic", bombard_arithmetic, "float64|rational");
  bombard->add_option("--tolerance", engine_tolerance, "Engine comparison tolerance");
  bombard->add_option("--out", out_path, "Output stem (default: stdout only)");
  bombard->callback([&] {
    const auto mode = spslab::arithmetic_from_string(bombard_arithmetic);
    if (!mode)
      throw ScenarioError("--arithmetic must be float64 or rational, got \"" +
                          bombard_arithmetic + "\"");
    if (*mode == ArithmeticMode::kRational) {
      const double tolerance = engine_tolerance < 0 ? 0.0 : engine_tolerance;
      exit_code = run_bombard<Rational>(base, spec_path, count, window, engine_count,
                                        tolerance, out_path);
    } else {
      const double tolerance = engine_tolerance < 0 ? 1e-9 : engine_tolerance;
      exit_code = run_bombard<double>(base, spec_path, count, window, engine_count,
                                      tolerance, out_path);
    }
  });

  std::vector<std::int64_t> bases{2, 3, 4, 5};
  auto* sweep = app.add_subcommand("sweep", "Decay exponents across speed bases");
  sweep->add_option("--bases", bases, "Speed bases to fit")->delimiter(',');
  sweep->add_option("--count", count, "Number of collisions")->check(CLI::PositiveNumber);
  sweep->add_option("--window", window, "Fit window [lo, hi]")->expected(2)->delimiter(',');
  sweep->add_option("--out", out_path, "Output file (default: stdout)");
  sweep->callback([&] {
    const auto rows =
        spslab::exponent_sweep(bases, count, window[0], std::min(window[1], count));
    std::string csv = "base,exponent,max_log_residual\n";
    for (const auto& row : rows) {
      csv += std::to_string(row.base);
      csv += "," + spslab::format_float(row.exponent);
      csv += "," + spslab::format_float(row.max_log_residual);
      csv += "\n";
    }
    deliver(csv, out_path);
  });

  std::string batch_dir;
  std::size_t jobs = 1;
  auto* batch = app.add_subcommand("batch", "Run every scenario in a directory");
  batch->add_option("dir", batch_dir, "Directory of scenario JSON files")->required();
  batch->add_option("--jobs", jobs, "Concurrent scenarios")->check(CLI::PositiveNumber);
  batch->add_option("--tolerance", ov.tolerance, "Override every check tolerance");
  batch->add_option("--out", out_path, "Also write the summary table here");
  batch->callback([&] {
    const auto summary = spslab::run_batch(batch_dir, jobs, ov.tolerance_override());
    std::cout << summary.table;
    if (!out_path.empty()) spslab::write_text_atomic(out_path, summary.table);
    if (summary.input_errors > 0)
      exit_code = 2;
    else if (summary.check_failures > 0)
      exit_code = 1;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}
