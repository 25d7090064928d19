#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spslab/measure.hpp"
#include "spslab/particle_engine.hpp"
#include "spslab/step_function.hpp"

namespace spslab {

template <class T>
struct AsymptoticProfile {
  StepFunction<T> limit_quantile;
  DiscreteMeasure<T> limit_measure;
  T equilibrium_time;
};

template <class T>
struct LimitResult {
  bool diverges;  // residual kinetic energy at the end of the log
  std::optional<AsymptoticProfile<T>> profile;
};

/// Long-time limit of a complete log. Divergent when the final clusters still
/// move (no stationary limit measure exists).
template <class T>
LimitResult<T> limit_profile(const EventLog<T>& log);

/// Squared distance to the limit, e(t) = || N(t) - N_inf ||^2.
template <class T>
T energy_gap(const EventLog<T>& log, const AsymptoticProfile<T>& profile, const T& t);

/// Pairing of the initial velocity profile with the current quantile,
/// theta(t) = <V0, N(t)>; nondecreasing and nonpositive for confined flows.
template <class T>
T theta(const EventLog<T>& log, const T& t);

/// Squared metric derivative |rho'|^2(t) = sum of m v^2 over clusters.
template <class T>
T metric_derivative_sq(const EventLog<T>& log, const T& t);

template <class T>
double metric_derivative(const EventLog<T>& log, const T& t);

/// Whether the time-derivative identities and time integrals below apply:
/// no wall ever absorbed momentum (no wall events, and atoms that start on a
/// boundary carry zero velocity).
template <class T>
bool identities_applicable(const EventLog<T>& log);

/// Residuals of the exact identities of the confined flow, evaluated on event
/// intervals and on a fixed probe grid. All residuals vanish in exact
/// arithmetic; float mode should stay below 1e-10. Keys are stable wire tags.
template <class T>
std::map<std::string, double> identity_residuals(const EventLog<T>& log,
                                                 const AsymptoticProfile<T>& profile);

struct NormalizationProbe {
  double residual_printed;  // 2 * integral of |rho'|^2 vs -<V0, N0>
  double residual_derived;  // integral of |rho'|^2 vs -<V0, N0>
  bool printed_holds;
  bool derived_holds;
};

/// Probes both candidate normalizations of the dissipation integral identity
/// and records which one holds; nothing is adjusted to force either.
template <class T>
NormalizationProbe normalization_probe(const EventLog<T>& log, double tolerance);

/// Worst margins of the order/shape properties (nonnegative margins pass):
/// theta sign and monotonicity, energy gap convex nonincreasing, primitive of
/// the quantile concave in t / convex in x / nondecreasing in t, the weighted
/// tail inequality for the metric derivative, and late-time t*|rho'| decay.
template <class T>
std::map<std::string, double> shape_margins(const EventLog<T>& log,
                                            const AsymptoticProfile<T>& profile,
                                            std::size_t t_samples = 33,
                                            std::size_t x_samples = 33);

struct DecayFit {
  double exponent;   // decay rate gamma in value ~ C * t^-gamma
  double intercept;
  double max_log_residual;
};

/// Least-squares power-law fit of (times, values) over the index window
/// [lo, hi]. Needs at least 8 points with positive entries.
DecayFit fit_decay_exponent(const std::vector<double>& times,
                            const std::vector<double>& values, std::size_t lo,
                            std::size_t hi);

}  // namespace spslab
