#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "spslab/cone_projection.hpp"
#include "spslab/piecewise_linear.hpp"
#include "spslab/step_function.hpp"
#include "support/generators.hpp"

using namespace spslab;

namespace {

/// Brute-force reference projection: enumerate every grouping of adjacent
/// cells into blocks, keep the groupings whose width-weighted block means are
/// nondecreasing, and take the one with the least squared error. The optimum
/// is blockwise constant at block means, so this search is exhaustive.
struct BruteResult {
  std::vector<double> values;
  double sse;
};

BruteResult brute_isotonic(const std::vector<double>& widths,
                           const std::vector<double>& cells) {
  const std::size_t n = cells.size();
  BruteResult best{{}, std::numeric_limits<double>::infinity()};
  for (std::uint32_t mask = 0; mask < (1u << (n - 1)); ++mask) {
    std::vector<double> vals(n);
    double sse = 0.0;
    double prev_mean = -std::numeric_limits<double>::infinity();
    bool feasible = true;
    std::size_t start = 0;
    for (std::size_t end = 0; end < n && feasible; ++end) {
      const bool boundary = end + 1 == n || (mask & (1u << end));
      if (!boundary) continue;
      double w = 0.0, wy = 0.0;
      for (std::size_t i = start; i <= end; ++i) {
        w += widths[i];
        wy += widths[i] * cells[i];
      }
      const double mean = wy / w;
      if (mean < prev_mean - 1e-12) feasible = false;
      prev_mean = mean;
      for (std::size_t i = start; i <= end; ++i) {
        vals[i] = mean;
        sse += widths[i] * (cells[i] - mean) * (cells[i] - mean);
      }
      start = end + 1;
    }
    if (feasible && sse < best.sse) best = {vals, sse};
  }
  return best;
}

StepFunction<double> from_widths(const std::vector<double>& widths,
                                 const std::vector<double>& values) {
  std::vector<double> breaks{0.0};
  for (const double w : widths) breaks.push_back(breaks.back() + w);
  breaks.back() = 1.0;
  return StepFunction<double>(breaks, values);
}

double sse_between(const StepFunction<double>& f, const StepFunction<double>& p) {
  return l2_distance_sq(f, p);
}

}  // namespace

TEST_CASE("pooling three equal cells") {
  const StepFunction<double> f({0.0, 1.0 / 3, 2.0 / 3, 1.0}, {3.0, 1.0, 2.0});
  const auto p = pava_isotonic(f);
  CHECK(p.values() == std::vector<double>{2.0, 2.0, 2.0});

  const StepFunction<double> g({0.0, 1.0 / 3, 2.0 / 3, 1.0}, {1.0, 3.0, 2.0});
  CHECK(pava_isotonic(g).values() == std::vector<double>{1.0, 2.5, 2.5});

  const StepFunction<double> sorted_in({0.0, 0.5, 1.0}, {-1.0, 1.0});
  CHECK(pava_isotonic(sorted_in).values() == sorted_in.values());
}

TEST_CASE("width-weighted pooling") {
  const auto p = pava_isotonic(from_widths({0.5, 0.25, 0.25}, {2.0, 0.0, 1.0}));
  CHECK(p.values() == std::vector<double>{1.25, 1.25, 1.25});
}

TEST_CASE("rational pooling is exact") {
  const StepFunction<Rational> f({Rational(0), Rational(1, 2), Rational(3, 4), Rational(1)},
                                 {Rational(3), Rational(1), Rational(2)});
  const auto p = pava_isotonic(f);
  CHECK(p.values() == std::vector<Rational>(3, Rational(9, 4)));
}

TEST_CASE("projection matches the exhaustive grouping oracle") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> n_cells(1, 6);
  std::uniform_int_distribution<int> value(-3, 3);
  for (int trial = 0; trial < 400; ++trial) {
    const int n = n_cells(rng);
    std::vector<double> widths;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      widths.push_back((1.0 + value(rng) + 3) / 16.0);
      total += widths.back();
    }
    for (auto& w : widths) w /= total;
    std::vector<double> cells;
    for (int i = 0; i < n; ++i) cells.push_back(double(value(rng)));

    const auto f = from_widths(widths, cells);
    const auto p = pava_isotonic(f);
    const auto oracle = brute_isotonic(widths, cells);
    CHECK(sse_between(f, p) == doctest::Approx(oracle.sse).epsilon(1e-10));
    for (int i = 0; i < n; ++i)
      CHECK(p.values()[std::size_t(i)] == doctest::Approx(oracle.values[std::size_t(i)]).epsilon(1e-10));
  }
}

TEST_CASE("projection is nondecreasing and mean preserving") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 60; ++trial) {
    const auto atoms = testgen::free_atoms<double>(rng, 2 + trial % 11);
    const DiscreteMeasure<double> mu(atoms);
    const auto f = velocity_steps_of(mu);
    const auto p = pava_isotonic(f);
    CHECK(p.is_nondecreasing(1e-12));
    const auto one = StepFunction<double>::constant(1.0);
    CHECK(l2_inner(f, one) == doctest::Approx(l2_inner(p, one)).epsilon(1e-12));
  }
}

TEST_CASE("envelope derivative reproduces the pooled projection") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 60; ++trial) {
    const auto atoms = testgen::free_atoms<double>(rng, 2 + trial % 11);
    const auto f = velocity_steps_of(DiscreteMeasure<double>(atoms));
    const auto result = project_monotone(f);
    CHECK(result.envelope.is_convex(1e-12));
    const auto via_envelope = result.envelope.derivative().refined(f.breakpoints());
    for (std::size_t i = 0; i < f.cells(); ++i)
      CHECK(result.projection.values()[i] ==
            doctest::Approx(via_envelope.values()[i]).epsilon(1e-9));
  }
}

TEST_CASE("contact intervals locate where the envelope touches") {
  const StepFunction<double> monotone({0.0, 0.5, 1.0}, {-1.0, 1.0});
  const auto full = project_monotone(monotone);
  REQUIRE(full.contact_intervals.size() == 1);
  CHECK(full.contact_intervals[0] == std::pair<double, double>(0.0, 1.0));

  const StepFunction<double> vee({0.0, 0.5, 1.0}, {1.0, -1.0});
  const auto pooled = project_monotone(vee);
  CHECK(pooled.projection.values() == std::vector<double>{0.0, 0.0});
  REQUIRE(pooled.contact_intervals.size() == 2);
  CHECK(pooled.contact_intervals[0] == std::pair<double, double>(0.0, 0.0));
  CHECK(pooled.contact_intervals[1] == std::pair<double, double>(1.0, 1.0));
}

TEST_CASE("certificates accept true projections and reject a perturbed one") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 40; ++trial) {
    const auto atoms = testgen::free_atoms<double>(rng, 2 + trial % 9);
    const auto f = velocity_steps_of(DiscreteMeasure<double>(atoms));
    const auto p = pava_isotonic(f);
    const auto report = cone_certificates(f, p, 7000 + std::uint64_t(trial), 1e-10);
    CHECK(report.ok);
    CHECK(report.worst_pairing <= 1e-10);
    CHECK(report.orthogonality <= 1e-10);
  }

  const StepFunction<double> f({0.0, 0.5, 1.0}, {1.0, -1.0});
  const StepFunction<double> wrong({0.0, 0.5, 1.0}, {-0.25, 0.25});
  const auto report = cone_certificates(f, wrong, 7, 1e-10);
  CHECK_FALSE(report.ok);
}

TEST_CASE("certificates are exact in rational mode") {
  const StepFunction<Rational> f({Rational(0), Rational(1, 2), Rational(1)},
                                 {Rational(1), Rational(-1)});
  const auto p = pava_isotonic(f);
  const auto report = cone_certificates(f, p, 11, Rational(0));
  CHECK(report.ok);
  CHECK(report.orthogonality == Rational(0));
}

TEST_CASE("confinement consistency from the velocity primitive") {
  const StepFunction<double> inward({0.0, 0.5, 1.0}, {1.0, -1.0});
  const auto good = is_confinement_consistent(inward);
  CHECK(good.consistent);
  CHECK(good.projection_agrees);
  CHECK(good.primitive_end == 0.0);
  CHECK(good.primitive_min == 0.0);

  const StepFunction<double> outward({0.0, 0.5, 1.0}, {-1.0, 1.0});
  const auto bad = is_confinement_consistent(outward);
  CHECK_FALSE(bad.consistent);
  CHECK(bad.projection_agrees);
  REQUIRE(bad.witness.has_value());
  CHECK(*bad.witness == 0.5);

  const StepFunction<double> drift({0.0, 1.0}, {1.0});
  CHECK_FALSE(is_confinement_consistent(drift).consistent);
}

TEST_CASE("antiderivative and envelope basics") {
  const StepFunction<double> f({0.0, 0.5, 1.0}, {2.0, -1.0});
  const auto F = antiderivative(f);
  CHECK(F.values() == std::vector<double>{0.0, 1.0, 0.5});
  CHECK(F(0.25) == 0.5);
  const auto env = convex_envelope(F);
  CHECK(env.values().front() == 0.0);
  CHECK(env.values().back() == 0.5);
  CHECK(env(0.5) == 0.25);
  CHECK(env.is_convex(0.0));
}
