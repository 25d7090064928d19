#pragma once

#include <cstddef>
#include <vector>

#include "spslab/measure.hpp"
#include "spslab/scalar.hpp"

namespace spslab {

/// Right-continuous step function on (0,1): breakpoints 0 = b_0 < ... < b_n = 1
/// and one value per cell [b_k, b_{k+1}).
template <class T>
class StepFunction {
 public:
  StepFunction(std::vector<T> breakpoints, std::vector<T> values);
  static StepFunction constant(T value);

  std::size_t cells() const { return values_.size(); }
  const std::vector<T>& breakpoints() const { return breakpoints_; }
  const std::vector<T>& values() const { return values_; }

  /// Value at x; arguments outside [0,1] clamp to the first/last cell.
  T operator()(const T& x) const;

  bool is_nondecreasing(const T& slack) const;
  /// Merges adjacent cells with equal values.
  StepFunction compacted() const;
  /// Re-expresses the function on a finer grid (must contain all breakpoints).
  StepFunction refined(const std::vector<T>& grid) const;

 private:
  std::vector<T> breakpoints_;
  std::vector<T> values_;
};

/// Sorted union of the two breakpoint grids.
template <class T>
std::vector<T> merged_breakpoints(const StepFunction<T>& f, const StepFunction<T>& g);

/// a*f + b*g on the common refinement.
template <class T>
StepFunction<T> affine_combine(const T& a, const StepFunction<T>& f,
                               const T& b, const StepFunction<T>& g);

template <class T>
T l2_inner(const StepFunction<T>& f, const StepFunction<T>& g);

template <class T>
T l2_norm_sq(const StepFunction<T>& f);

template <class T>
T l2_distance_sq(const StepFunction<T>& f, const StepFunction<T>& g);

template <class T>
double l2_norm(const StepFunction<T>& f);

template <class T>
double l2_distance(const StepFunction<T>& f, const StepFunction<T>& g);

/// True when f and g agree cell by cell (exactly) after refinement to the
/// common grid; grids may differ.
template <class T>
bool equal_as_functions(const StepFunction<T>& f, const StepFunction<T>& g);

/// Quantile map of mu: the nondecreasing step function pushing Lebesgue
/// measure on (0,1) to mu. Breakpoints are the cumulative masses, values the
/// atom positions.
template <class T>
StepFunction<T> quantile_of(const DiscreteMeasure<T>& mu);

/// Atom velocities laid out on the same mass partition as quantile_of.
template <class T>
StepFunction<T> velocity_steps_of(const DiscreteMeasure<T>& mu);

/// Inverse of quantile_of for nondecreasing input: each run of equal values
/// becomes an atom (position = value, mass = total width, velocity 0).
template <class T>
DiscreteMeasure<T> measure_of(const StepFunction<T>& quantile);

/// Right-continuous cumulative distribution map R -> [0,1].
template <class T>
class Cdf {
 public:
  Cdf(std::vector<T> positions, std::vector<T> cumulative);
  T operator()(const T& y) const;
  const std::vector<T>& positions() const { return positions_; }
  const std::vector<T>& cumulative() const { return cumulative_; }

 private:
  std::vector<T> positions_;
  std::vector<T> cumulative_;
};

template <class T>
Cdf<T> cdf_of(const DiscreteMeasure<T>& mu);

/// Squared 2-Wasserstein distance, i.e. the squared L2 distance of quantiles.
template <class T>
T wasserstein2_sq(const DiscreteMeasure<T>& mu, const DiscreteMeasure<T>& nu);

template <class T>
double wasserstein2(const DiscreteMeasure<T>& mu, const DiscreteMeasure<T>& nu);

}  // namespace spslab
