#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "spslab/scalar.hpp"

namespace spslab {

/// Infinite bombardment family with geometric data: resting targets at
/// x_k = 1 - (1 - x0) rx^k carrying masses m_k = (1 - rm) rm^k, struck in
/// order by a right-moving seed cluster against incoming speeds
/// b_k = b1 rb^(k-1). All ratios lie in (0, 1), so the limit point and the
/// energy-gap tails have closed forms.
template <class T>
struct GeometricBombardment {
  T x0, rx;
  T rm;
  T b1, rb;

  /// Everything-halves family: x0 = 1/2, rx = rm = 1/2, b1 = rb = 1/2.
  static GeometricBombardment reference();
  /// Same geometry but incoming speeds n^-k; larger bases slow the decay.
  static GeometricBombardment speed_base(std::int64_t n);

  T base_mass() const { return T(1) - rm; }
  T position(std::size_t k) const;
  T mass(std::size_t k) const;
  T cumulative_mass(std::size_t k) const;
  T speed(std::size_t k) const;  // k >= 1

  /// Unique seed speed making every collision happen: the total incoming
  /// momentum divided by the seed mass.
  T admissible_speed() const;
  /// Conserved center of mass; the system collapses onto it.
  T limit_point() const;
};

/// Truncated bombardment given by explicit lists plus certified tail data:
/// positions/masses for k = 0..K, incoming speeds for k = 1..K (nonincreasing),
/// the mass beyond the truncation and a bound on its momentum.
template <class T>
struct ExplicitBombardment {
  std::vector<T> positions;
  std::vector<T> masses;
  std::vector<T> speeds;
  T tail_mass;
  T tail_momentum;

  /// Throws std::invalid_argument listing every violated requirement.
  void validate() const;
  T admissible_speed() const;
  /// Midpoint of the bracket [sum + tail * x_K, sum + tail * 1].
  T limit_point() const;
  T limit_point_error() const;
};

/// One collision cascade: the seed cluster's collision times, points and
/// outgoing speeds per absorbed target, with the energy gap at each collision
/// time and a certified bound on what the truncation omitted from it.
template <class T>
struct BombardmentRun {
  T initial_speed;
  T limit_point;
  T limit_point_error;
  std::vector<T> times;      // t_0 = 0 .. t_K
  std::vector<T> points;     // y_0 = x_0 .. y_K
  std::vector<T> speeds;     // v_0 .. v_K, all positive
  std::vector<T> gaps;       // e(t_k)
  std::vector<T> gap_tails;  // certified remainder included in gaps
  double momentum_residual;  // worst gap in the momentum closed form
};

template <class T>
BombardmentRun<T> run_recursion(const GeometricBombardment<T>& family, std::size_t count);

template <class T>
BombardmentRun<T> run_recursion(const ExplicitBombardment<T>& spec);

struct CrossValidation {
  std::optional<std::size_t> first_mismatch;
  double max_time_error;
  double max_point_error;
  double max_speed_error;
  bool ok;
};

/// Replays the truncated family through the collision engine (masses
/// renormalized, dynamics unchanged) and compares every event against the
/// recursion.
template <class T>
CrossValidation cross_validate_with_engine(const GeometricBombardment<T>& family,
                                           std::size_t count, double tolerance);

struct SweepRow {
  std::int64_t base;
  double exponent;
  double max_log_residual;
};

/// Fitted energy decay exponent per speed base, over collision index window
/// [lo, hi]. Runs in exact arithmetic internally (deep recursions cancel
/// catastrophically in floats).
std::vector<SweepRow> exponent_sweep(const std::vector<std::int64_t>& bases,
                                     std::size_t count, std::size_t lo, std::size_t hi);

}  // namespace spslab
