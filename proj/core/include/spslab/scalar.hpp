#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>

namespace spslab {

/// Arbitrary-precision rational scalar backing the exact arithmetic mode.
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return x.convert_to<double>(); }

template <class T>
T from_fraction(std::int64_t num, std::int64_t den);

template <>
inline double from_fraction<double>(std::int64_t num, std::int64_t den) {
  return static_cast<double>(num) / static_cast<double>(den);
}

template <>
inline Rational from_fraction<Rational>(std::int64_t num, std::int64_t den) {
  return Rational(num, den);
}

template <class T>
T from_double(double x);

template <>
inline double from_double<double>(double x) {
  return x;
}

template <>
inline Rational from_double<Rational>(double x) {
  return Rational(x);
}

// Concrete overloads so expression-template arguments materialize first.
inline double abs_value(double x) { return std::abs(x); }
inline Rational abs_value(const Rational& x) { return x < 0 ? Rational(-x) : x; }

/// Per-mode coincidence slack for positions and times. Rational mode compares
/// exactly; float mode snaps values closer than 1e-12.
template <class T>
struct ArithmeticTraits;

template <>
struct ArithmeticTraits<double> {
  static constexpr bool is_exact = false;
  static double coincidence() { return 1e-12; }
};

template <>
struct ArithmeticTraits<Rational> {
  static constexpr bool is_exact = true;
  static Rational coincidence() { return Rational(0); }
};

}  // namespace spslab
