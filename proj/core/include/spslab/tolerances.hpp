#pragma once

namespace spslab::tol {

// Float-mode gates. Rational mode replaces most of these with exact equality.
inline constexpr double kCoincidence = 1e-12;   // atom/event position and time snap
inline constexpr double kMonotoneSlack = 1e-12; // nondecreasing postconditions
inline constexpr double kIdentity = 1e-10;      // identity residual gate
inline constexpr double kShape = 1e-10;         // inequality/convexity margin gate
inline constexpr double kDualOracle = 1e-9;     // engine vs projection L2 gate
inline constexpr double kEquivalence = 1e-10;   // wall engine vs confined free flow, W2
inline constexpr double kCertificate = 1e-10;   // cone optimality certificate gate
inline constexpr double kUnit = 1e-12;          // frozen-value unit test gate

}  // namespace spslab::tol
