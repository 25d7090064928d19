#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spslab/piecewise_linear.hpp"
#include "spslab/step_function.hpp"

namespace spslab {

/// L2(0,1) projection onto the cone of nondecreasing functions, computed by
/// width-weighted pooling of adjacent violating cells (ties pooled eagerly, so
/// the output is canonical). Result lives on the input's partition.
template <class T>
StepFunction<T> pava_isotonic(const StepFunction<T>& f);

template <class T>
struct ConeProjectionResult {
  StepFunction<T> projection;  // pooled (production) route
  /// Greatest convex minorant of the antiderivative; its derivative is an
  /// independent route to the same projection.
  PiecewiseLinear<T> envelope;
  /// Maximal mass-coordinate intervals where the envelope touches the
  /// antiderivative. Off these intervals the projection is locally constant.
  std::vector<std::pair<T, T>> contact_intervals;
};

template <class T>
ConeProjectionResult<T> project_monotone(const StepFunction<T>& f);

/// Variational optimality certificates for a claimed projection p of f:
/// <f - p, k - p> <= 0 for cone members k drawn from a deterministic family
/// (constants, negative tail indicators, p itself, seeded random monotone
/// functions), plus the orthogonality identity <f - p, p> = 0.
template <class T>
struct CertificateReport {
  T worst_pairing;     // max over the family of <f - p, k - p>
  T orthogonality;     // |<f - p, p>|
  bool ok;
  std::string worst_label;
};

template <class T>
CertificateReport<T> cone_certificates(const StepFunction<T>& f,
                                       const StepFunction<T>& projection,
                                       std::uint64_t seed, const T& tolerance);

/// Whether an initial velocity profile keeps the free flow inside the support
/// hull forever: the antiderivative of the profile must end at 0 and stay
/// nonnegative. Checked both from the antiderivative and from the projection
/// (which must vanish identically); the two routes are reported separately.
template <class T>
struct ConfinementCheck {
  bool consistent;          // primitive route: end value 0, min >= 0
  bool projection_agrees;   // projection route reached the same verdict
  T primitive_end;
  T primitive_min;
  std::optional<T> witness;  // argmin when the primitive dips negative
};

template <class T>
ConfinementCheck<T> is_confinement_consistent(const StepFunction<T>& velocity_profile);

}  // namespace spslab
