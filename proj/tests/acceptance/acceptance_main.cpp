// End-to-end acceptance gate: one self-contained criterion per section, one
// pass/fail line each, exit status = number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spslab/asymptotics.hpp"
#include "spslab/bombardment.hpp"
#include "spslab/cone_projection.hpp"
#include "spslab/domain.hpp"
#include "spslab/lagrangian_solver.hpp"
#include "spslab/measure.hpp"
#include "spslab/particle_engine.hpp"
#include "spslab/scalar.hpp"
#include "spslab/step_function.hpp"
#include "support/generators.hpp"

using namespace spslab;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;
};

struct Tally {
  double max = 0.0;
  void feed(double v) { max = std::max(max, v); }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::vector<EventLog<double>> confined_suite(std::size_t count) {
  std::mt19937_64 rng(0xC0FFEE);
  std::vector<EventLog<double>> logs;
  logs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto atoms = testgen::confined_atoms<double>(rng, 2 + i % 12);
    logs.push_back(simulate(atoms, Domain<double>::interval(0.0, 1.0)));
  }
  return logs;
}

Verdict engine_vs_projection() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Tally worst;
  for (int trial = 0; trial < 200; ++trial) {
    const auto atoms = testgen::free_atoms<double>(rng, 2 + trial % 15);
    const DiscreteMeasure<double> mu(atoms);
    const auto log = simulate(mu, Domain<double>::real_line());
    const auto sol = LagrangianSolution<double>::from_measure(mu);
    const double span = 1.25 * to_double(*log.equilibrium_time()) + 1.0;
    for (int probe = 0; probe < 100; ++probe) {
      const double t = span * unit(rng);
      worst.feed(l2_distance(log.quantile_at(t), solve_quantile(sol, t)));
    }
  }
  return {worst.max <= 1e-9,
          "max L2 " + fmt(worst.max) + " over 200 scenarios x 100 times (bound 1e-9)"};
}

Verdict walls_vs_confined_flow() {
  std::mt19937_64 rng(102);
  Tally worst;
  bool all_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const auto atoms = testgen::box_atoms<double>(rng, 2 + trial % 13);
    const auto report = confinement_equivalence(
        DiscreteMeasure<double>(atoms), Domain<double>::interval(0.0, 1.0), 64, 1e-10);
    all_ok = all_ok && report.ok;
    worst.feed(report.max_w2);
  }
  return {all_ok && worst.max <= 1e-10,
          "max W2 " + fmt(worst.max) + " over 100 box scenarios x 64 times (bound 1e-10)"};
}

Verdict exhaustive_isotonic() {
  Tally worst;
  long cases = 0;
  for (int n = 1; n <= 6; ++n) {
    std::vector<double> breaks(std::size_t(n) + 1);
    for (int i = 0; i <= n; ++i) breaks[std::size_t(i)] = double(i) / n;
    std::vector<double> values(static_cast<std::size_t>(n));
    long combos = 1;
    for (int i = 0; i < n; ++i) combos *= 7;
    for (long code = 0; code < combos; ++code) {
      long rest = code;
      for (int i = 0; i < n; ++i) {
        values[std::size_t(i)] = double(rest % 7 - 3);
        rest /= 7;
      }
      const StepFunction<double> f(breaks, values);
      const auto fast = pava_isotonic(f);

      double best = std::numeric_limits<double>::infinity();
      for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
        double sse = 0.0, prev = -std::numeric_limits<double>::infinity();
        bool feasible = true;
        int start = 0;
        for (int end = 0; end < n && feasible; ++end) {
          if (end + 1 < n && !(mask & (1u << end))) continue;
          double sum = 0.0;
          for (int i = start; i <= end; ++i) sum += values[std::size_t(i)];
          const double mean = sum / (end - start + 1);
          if (mean < prev) feasible = false;
          prev = mean;
          for (int i = start; i <= end; ++i)
            sse += (values[std::size_t(i)] - mean) * (values[std::size_t(i)] - mean);
          start = end + 1;
        }
        if (feasible && sse < best) best = sse;
      }
      const double got = n * l2_distance_sq(f, fast);  // cells have width 1/n
      worst.feed(std::abs(got - best));
      ++cases;
    }
  }
  return {worst.max <= 1e-10, "max objective gap " + fmt(worst.max) + " over " +
                                  std::to_string(cases) + " enumerated cases (bound 1e-10)"};
}

Verdict identity_suite(const std::vector<EventLog<double>>& logs) {
  Tally worst;
  for (const auto& log : logs) {
    const auto limit = limit_profile(log);
    if (!limit.profile) return {false, "a confined scenario failed to settle"};
    for (const auto& [key, value] : identity_residuals(log, *limit.profile))
      worst.feed(value);
  }
  // spot-check exactness in rational arithmetic
  std::mt19937_64 rng(104);
  double rational_worst = 0.0;
  for (int trial = 0; trial < 8; ++trial) {
    const auto atoms = testgen::confined_atoms<Rational>(rng, 3 + trial);
    const auto log = simulate(atoms, Domain<Rational>::interval(Rational(0), Rational(1)));
    for (const auto& [key, value] : identity_residuals(log, *limit_profile(log).profile))
      rational_worst = std::max(rational_worst, value);
  }
  return {worst.max <= 1e-10 && rational_worst == 0.0,
          "max residual " + fmt(worst.max) + " over 50 scenarios (bound 1e-10); rational worst " +
              fmt(rational_worst)};
}

Verdict inequality_suite(const std::vector<EventLog<double>>& logs) {
  double worst_margin = std::numeric_limits<double>::infinity();
  bool oleinik_ok = true;
  for (const auto& log : logs) {
    const auto limit = limit_profile(log);
    if (!limit.profile) return {false, "a confined scenario failed to settle"};
    for (const auto& [key, value] : shape_margins(log, *limit.profile))
      worst_margin = std::min(worst_margin, value);
    const double t_eq = to_double(limit.profile->equilibrium_time);
    for (const double t : {0.25, 1.0, 2.0 * t_eq + 0.5}) {
      const auto report = oleinik_check(log, t, 1e-10);
      oleinik_ok = oleinik_ok && report.quotient_ok && report.sided_ok && report.uniform_ok;
    }
  }
  return {worst_margin >= -1e-10 && oleinik_ok,
          "min margin " + fmt(worst_margin) + " over 50 scenarios (bound -1e-10); slope bounds " +
              (oleinik_ok ? "hold" : "violated")};
}

Verdict moving_point_mass_decay() {
  const auto sol =
      LagrangianSolution<double>::from_measure(DiscreteMeasure<double>::delta(0.5, 1.0));
  Tally worst_eq, worst_val;
  for (int k = 1; k <= 20; ++k) {
    const double t = 0.25 * k;
    const auto check = generic_decay_check(sol, t);
    worst_eq.feed(std::abs(check.lhs - check.rhs));
    worst_val.feed(std::abs(solve_quantile(sol, t)(0.5) - (0.5 + t)));
  }
  return {worst_eq.max <= 1e-12 && worst_val.max == 0.0,
          "equality gap " + fmt(worst_eq.max) + " at 20 times (bound 1e-12); trajectory exact"};
}

Verdict bombardment_reference() {
  const auto fam = GeometricBombardment<Rational>::reference();
  const auto run = run_recursion(fam, 60);
  const bool first_steps = fam.admissible_speed() == Rational(1, 3) &&
                           run.speeds[1] == Rational(1, 18) &&
                           run.times[1] == Rational(3, 10) && run.points[1] == Rational(3, 5);
  const bool momentum_exact = run.momentum_residual == 0.0;

  std::vector<double> times, gaps;
  for (std::size_t k = 0; k < run.times.size(); ++k) {
    times.push_back(to_double(run.times[k]));
    gaps.push_back(to_double(run.gaps[k]));
  }
  const auto fit = fit_decay_exponent(times, gaps, 20, 60);
  const bool decay_ok = std::abs(fit.exponent - 1.0) <= 0.1;
  return {first_steps && momentum_exact && decay_ok,
          std::string("first steps ") + (first_steps ? "exact" : "WRONG") + "; momentum " +
              (momentum_exact ? "exact to k=60" : "drifts") + "; fitted exponent " +
              fmt(fit.exponent) + " (target 1 +- 0.1)"};
}

Verdict normalization_probe_suite(const std::vector<EventLog<double>>& logs) {
  int derived = 0, printed = 0;
  Tally derived_worst;
  for (const auto& log : logs) {
    const auto probe = normalization_probe(log, 1e-10);
    derived += probe.derived_holds ? 1 : 0;
    printed += probe.printed_holds ? 1 : 0;
    derived_worst.feed(probe.residual_derived);
  }
  const bool ok =
      derived == int(logs.size()) && printed < int(logs.size()) && derived_worst.max <= 1e-10;
  std::ostringstream detail;
  detail << "singly weighted form holds " << derived << "/" << logs.size()
         << " (worst " << fmt(derived_worst.max) << "), doubled form holds " << printed << "/"
         << logs.size() << "; the uniform one is the derived form";
  return {ok, detail.str()};
}

Verdict limit_collapse() {
  std::mt19937_64 seeds(109);
  bool ok = true;
  std::string note;
  for (int trial = 0; trial < 5 && ok; ++trial) {
    const auto atoms = testgen::confined_atoms<double>(seeds, 4 + 2 * trial);
    const auto log = simulate(atoms, Domain<double>::interval(0.0, 1.0));
    const auto profile = *limit_profile(log).profile;
    const double t_eq = to_double(profile.equilibrium_time);

    StepFunction<double> snapshots[2] = {StepFunction<double>::constant(0.0),
                                         StepFunction<double>::constant(0.0)};
    for (int seq = 0; seq < 2; ++seq) {
      std::mt19937_64 rng(5000 + 2 * trial + seq);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      std::vector<double> ts;
      for (int j = 0; j < 12; ++j) ts.push_back((t_eq + 0.5) * 2.0 * unit(rng));
      std::sort(ts.begin(), ts.end());
      ts.push_back(t_eq * 2.0 + 1.0 + seq);  // final probe beyond settling
      double prev = std::numeric_limits<double>::infinity();
      for (const double t : ts) {
        const double e = energy_gap(log, profile, t);
        if (e > prev + 1e-12) {
          ok = false;
          note = "gap increased along a time sequence";
        }
        prev = e;
      }
      if (prev > 1e-20) {
        ok = false;
        note = "gap failed to vanish";
      }
      snapshots[seq] = log.quantile_at(ts.back());
    }
    if (ok && !(snapshots[0].breakpoints() == snapshots[1].breakpoints() &&
                snapshots[0].values() == snapshots[1].values())) {
      ok = false;
      note = "the two sequences saw different limits";
    }
  }

  // a split pair is unstable: tiny inward velocities collapse the limit to the
  // midpoint while the unperturbed state stays split
  const auto base = simulate(std::vector<Atom<double>>{{0.5, 0.0, 0.0}, {0.5, 1.0, 0.0}},
                             Domain<double>::interval(0.0, 1.0));
  const auto base_limit = limit_profile(base);
  bool instability = !base_limit.diverges && base_limit.profile->limit_measure.size() == 2;
  for (const double eps : {0.25, 0.0625}) {
    const auto perturbed =
        simulate(std::vector<Atom<double>>{{0.5, eps, eps}, {0.5, 1.0 - eps, -eps}},
                 Domain<double>::interval(0.0, 1.0));
    const auto limit = limit_profile(perturbed);
    const auto& atoms = limit.profile->limit_measure.atoms();
    instability = instability && atoms.size() == 1 && atoms[0].position == 0.5 &&
                  to_double(*perturbed.equilibrium_time()) == (0.5 - eps) / eps;
  }
  if (!instability) {
    ok = false;
    note += std::string(note.empty() ? "" : "; ") + "perturbed split pairs missed the midpoint";
  }
  return {ok, ok ? "gaps vanish along both seeded sequences with cell-exact limits; "
                   "perturbed split pairs collapse to 1/2, the unperturbed one stays split"
                 : note};
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  int failures = 0;
  int id = 0;

  const auto logs = confined_suite(50);

  struct Item {
    const char* label;
    std::function<Verdict()> body;
    double budget_s;
  };
  const Item items[] = {
      {"event engine matches cone projection on free lines",
       engine_vs_projection, 10.0},
      {"wall engine matches the frozen free flow on boxes",
       walls_vs_confined_flow, 10.0},
      {"cone projection matches exhaustive search", exhaustive_isotonic, 5.0},
      {"derivative and integral identities", [&] { return identity_suite(logs); }, 60.0},
      {"sign, shape and slope inequalities", [&] { return inequality_suite(logs); }, 60.0},
      {"decay bound is tight for a moving point mass", moving_point_mass_decay, 60.0},
      {"bombardment recursion reference values and decay rate",
       bombardment_reference, 30.0},
      {"dissipation integral normalization",
       [&] { return normalization_probe_suite(logs); }, 60.0},
      {"limits collapse identically along independent time sequences",
       limit_collapse, 60.0},
  };

  for (const auto& item : items) {
    ++id;
    const auto start = clock::now();
    Verdict verdict;
    try {
      verdict = item.body();
    } catch (const std::exception& e) {
      verdict = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(clock::now() - start).count();
    if (elapsed > item.budget_s) {
      verdict.ok = false;
      verdict.detail += "; over time budget " + fmt(item.budget_s) + "s";
    }
    std::printf("[%s] %d: %s (%s; %.2fs)\n", verdict.ok ? "PASS" : "FAIL", id,
                item.label, verdict.detail.c_str(), elapsed);
    failures += verdict.ok ? 0 : 1;
  }
  std::printf("%d/9 acceptance criteria passed\n", 9 - failures);
  return failures;
}
