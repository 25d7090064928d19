#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "spslab/scalar.hpp"
#include "spslab/step_function.hpp"

namespace spslab {

/// Continuous piecewise-linear function on [0,1], given by knots
/// 0 = x_0 < ... < x_n = 1 and values at the knots.
template <class T>
class PiecewiseLinear {
 public:
  PiecewiseLinear(std::vector<T> knots, std::vector<T> values);

  const std::vector<T>& knots() const { return knots_; }
  const std::vector<T>& values() const { return values_; }

  T operator()(const T& x) const;
  T front_value() const { return values_.front(); }
  T back_value() const { return values_.back(); }

  /// Slopes are nondecreasing up to `slack`.
  bool is_convex(const T& slack) const;
  /// (argmin, min) over the knots; for piecewise-linear functions the minimum
  /// is attained at a knot.
  std::pair<T, T> minimum() const;

  StepFunction<T> derivative() const;

 private:
  std::vector<T> knots_;
  std::vector<T> values_;
};

/// Antiderivative with value 0 at the left end; knots are f's breakpoints.
template <class T>
PiecewiseLinear<T> antiderivative(const StepFunction<T>& f);

/// Greatest convex minorant over the knot set (lower convex hull). Collinear
/// interior knots are dropped, so the result is minimal.
template <class T>
PiecewiseLinear<T> convex_envelope(const PiecewiseLinear<T>& f);

}  // namespace spslab
