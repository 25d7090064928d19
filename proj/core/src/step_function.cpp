#include "spslab/step_function.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace spslab {

namespace {

template <class T>
void check_grid(const std::vector<T>& breakpoints, std::size_t n_values) {
  if (breakpoints.size() != n_values + 1 || n_values == 0) {
    throw std::invalid_argument("step function: needs n+1 breakpoints for n >= 1 values");
  }
  const T eps(ArithmeticTraits<T>::is_exact ? 0.0 : 1e-12);
  if (!(abs_value(breakpoints.front() - T(0)) <= eps) ||
      !(abs_value(breakpoints.back() - T(1)) <= eps)) {
    throw std::invalid_argument("step function: breakpoints must span [0, 1]");
  }
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (!(breakpoints[i] < breakpoints[i + 1])) {
      throw std::invalid_argument("step function: breakpoints must be strictly increasing (index " +
                                  std::to_string(i) + ")");
    }
  }
}

}  // namespace

template <class T>
StepFunction<T>::StepFunction(std::vector<T> breakpoints, std::vector<T> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  check_grid(breakpoints_, values_.size());
  breakpoints_.front() = T(0);
  breakpoints_.back() = T(1);
}

template <class T>
StepFunction<T> StepFunction<T>::constant(T value) {
  return StepFunction({T(0), T(1)}, {std::move(value)});
}

template <class T>
T StepFunction<T>::operator()(const T& x) const {
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
  auto idx = static_cast<std::ptrdiff_t>(it - breakpoints_.begin()) - 1;
  if (idx < 0) idx = 0;
  if (idx >= static_cast<std::ptrdiff_t>(values_.size())) {
    idx = static_cast<std::ptrdiff_t>(values_.size()) - 1;
  }
  return values_[static_cast<std::size_t>(idx)];
}

template <class T>
bool StepFunction<T>::is_nondecreasing(const T& slack) const {
  for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
    if (values_[i] - values_[i + 1] > slack) return false;
  }
  return true;
}

template <class T>
StepFunction<T> StepFunction<T>::compacted() const {
  std::vector<T> bp{breakpoints_.front()};
  std::vector<T> vals;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!vals.empty() && vals.back() == values_[i]) {
      bp.back() = breakpoints_[i + 1];
    } else {
      vals.push_back(values_[i]);
      bp.push_back(breakpoints_[i + 1]);
    }
  }
  return StepFunction(std::move(bp), std::move(vals));
}

template <class T>
StepFunction<T> StepFunction<T>::refined(const std::vector<T>& grid) const {
  std::vector<T> vals;
  vals.reserve(grid.size() - 1);
  std::size_t cell = 0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    while (cell + 1 < values_.size() && !(grid[i] < breakpoints_[cell + 1])) ++cell;
    vals.push_back(values_[cell]);
  }
  return StepFunction(grid, std::move(vals));
}

template <class T>
std::vector<T> merged_breakpoints(const StepFunction<T>& f, const StepFunction<T>& g) {
  std::vector<T> out;
  out.reserve(f.breakpoints().size() + g.breakpoints().size());
  std::set_union(f.breakpoints().begin(), f.breakpoints().end(),
                 g.breakpoints().begin(), g.breakpoints().end(), std::back_inserter(out));
  return out;
}

template <class T>
StepFunction<T> affine_combine(const T& a, const StepFunction<T>& f,
                               const T& b, const StepFunction<T>& g) {
  const auto grid = merged_breakpoints(f, g);
  const auto fr = f.refined(grid);
  const auto gr = g.refined(grid);
  std::vector<T> vals(fr.cells());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    vals[i] = a * fr.values()[i] + b * gr.values()[i];
  }
  return StepFunction<T>(grid, std::move(vals));
}

template <class T>
T l2_inner(const StepFunction<T>& f, const StepFunction<T>& g) {
  const auto grid = merged_breakpoints(f, g);
  const auto fr = f.refined(grid);
  const auto gr = g.refined(grid);
  T acc(0);
  for (std::size_t i = 0; i < fr.cells(); ++i) {
    acc += (grid[i + 1] - grid[i]) * fr.values()[i] * gr.values()[i];
  }
  return acc;
}

template <class T>
T l2_norm_sq(const StepFunction<T>& f) {
  T acc(0);
  for (std::size_t i = 0; i < f.cells(); ++i) {
    const T& v = f.values()[i];
    acc += (f.breakpoints()[i + 1] - f.breakpoints()[i]) * v * v;
  }
  return acc;
}

template <class T>
T l2_distance_sq(const StepFunction<T>& f, const StepFunction<T>& g) {
  return l2_norm_sq(affine_combine(T(1), f, T(-1), g));
}

template <class T>
double l2_norm(const StepFunction<T>& f) {
  return std::sqrt(to_double(l2_norm_sq(f)));
}

template <class T>
double l2_distance(const StepFunction<T>& f, const StepFunction<T>& g) {
  return std::sqrt(to_double(l2_distance_sq(f, g)));
}

template <class T>
bool equal_as_functions(const StepFunction<T>& f, const StepFunction<T>& g) {
  const auto grid = merged_breakpoints(f, g);
  const auto fr = f.refined(grid);
  const auto gr = g.refined(grid);
  return fr.values() == gr.values();
}

template <class T>
StepFunction<T> quantile_of(const DiscreteMeasure<T>& mu) {
  std::vector<T> bp(mu.size() + 1);
  std::vector<T> vals(mu.size());
  bp[0] = T(0);
  T cum(0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    cum += mu.atoms()[i].mass;
    bp[i + 1] = cum;
    vals[i] = mu.atoms()[i].position;
  }
  bp.back() = T(1);
  return StepFunction<T>(std::move(bp), std::move(vals));
}

template <class T>
StepFunction<T> velocity_steps_of(const DiscreteMeasure<T>& mu) {
  std::vector<T> bp(mu.size() + 1);
  std::vector<T> vals(mu.size());
  bp[0] = T(0);
  T cum(0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    cum += mu.atoms()[i].mass;
    bp[i + 1] = cum;
    vals[i] = mu.atoms()[i].velocity;
  }
  bp.back() = T(1);
  return StepFunction<T>(std::move(bp), std::move(vals));
}

template <class T>
DiscreteMeasure<T> measure_of(const StepFunction<T>& quantile) {
  if (!quantile.is_nondecreasing(T(ArithmeticTraits<T>::is_exact ? 0.0 : 1e-12))) {
    throw std::invalid_argument("measure_of: input must be nondecreasing");
  }
  std::vector<Atom<T>> atoms;
  for (std::size_t i = 0; i < quantile.cells(); ++i) {
    const T width = quantile.breakpoints()[i + 1] - quantile.breakpoints()[i];
    if (!atoms.empty() && atoms.back().position == quantile.values()[i]) {
      atoms.back().mass += width;
    } else {
      atoms.push_back(Atom<T>{width, quantile.values()[i], T(0)});
    }
  }
  return DiscreteMeasure<T>(std::move(atoms));
}

template <class T>
Cdf<T>::Cdf(std::vector<T> positions, std::vector<T> cumulative)
    : positions_(std::move(positions)), cumulative_(std::move(cumulative)) {
  if (positions_.size() != cumulative_.size() || positions_.empty()) {
    throw std::invalid_argument("cdf: positions/cumulative size mismatch");
  }
}

template <class T>
T Cdf<T>::operator()(const T& y) const {
  auto it = std::upper_bound(positions_.begin(), positions_.end(), y);
  if (it == positions_.begin()) return T(0);
  return cumulative_[static_cast<std::size_t>(it - positions_.begin()) - 1];
}

template <class T>
Cdf<T> cdf_of(const DiscreteMeasure<T>& mu) {
  std::vector<T> pos(mu.size());
  std::vector<T> cum(mu.size());
  T acc(0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    pos[i] = mu.atoms()[i].position;
    acc += mu.atoms()[i].mass;
    cum[i] = acc;
  }
  cum.back() = T(1);
  return Cdf<T>(std::move(pos), std::move(cum));
}

template <class T>
T wasserstein2_sq(const DiscreteMeasure<T>& mu, const DiscreteMeasure<T>& nu) {
  return l2_distance_sq(quantile_of(mu), quantile_of(nu));
}

template <class T>
double wasserstein2(const DiscreteMeasure<T>& mu, const DiscreteMeasure<T>& nu) {
  return std::sqrt(to_double(wasserstein2_sq(mu, nu)));
}

#define SPSLAB_INSTANTIATE(T)                                                              \
  template class StepFunction<T>;                                                          \
  template class Cdf<T>;                                                                   \
  template std::vector<T> merged_breakpoints(const StepFunction<T>&, const StepFunction<T>&); \
  template StepFunction<T> affine_combine(const T&, const StepFunction<T>&, const T&,      \
                                          const StepFunction<T>&);                         \
  template T l2_inner(const StepFunction<T>&, const StepFunction<T>&);                     \
  template T l2_norm_sq(const StepFunction<T>&);                                           \
  template T l2_distance_sq(const StepFunction<T>&, const StepFunction<T>&);               \
  template double l2_norm(const StepFunction<T>&);                                         \
  template double l2_distance(const StepFunction<T>&, const StepFunction<T>&);             \
  template bool equal_as_functions(const StepFunction<T>&, const StepFunction<T>&);        \
  template StepFunction<T> quantile_of(const DiscreteMeasure<T>&);                         \
  template StepFunction<T> velocity_steps_of(const DiscreteMeasure<T>&);                   \
  template DiscreteMeasure<T> measure_of(const StepFunction<T>&);                          \
  template Cdf<T> cdf_of(const DiscreteMeasure<T>&);                                       \
  template T wasserstein2_sq(const DiscreteMeasure<T>&, const DiscreteMeasure<T>&);        \
  template double wasserstein2(const DiscreteMeasure<T>&, const DiscreteMeasure<T>&);

SPSLAB_INSTANTIATE(double)
SPSLAB_INSTANTIATE(Rational)
#undef SPSLAB_INSTANTIATE

}  // namespace spslab
