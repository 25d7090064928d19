#include "spslab/piecewise_linear.hpp"

#include <algorithm>
#include <stdexcept>

namespace spslab {

template <class T>
PiecewiseLinear<T>::PiecewiseLinear(std::vector<T> knots, std::vector<T> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.size() != values_.size() || knots_.size() < 2) {
    throw std::invalid_argument("piecewise linear: needs matching knots/values, >= 2");
  }
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    if (!(knots_[i] < knots_[i + 1])) {
      throw std::invalid_argument("piecewise linear: knots must be strictly increasing");
    }
  }
}

template <class T>
T PiecewiseLinear<T>::operator()(const T& x) const {
  if (!(knots_.front() < x)) return values_.front();
  if (!(x < knots_.back())) return values_.back();
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  const auto k = static_cast<std::size_t>(it - knots_.begin()) - 1;
  const T w = (x - knots_[k]) / (knots_[k + 1] - knots_[k]);
  return values_[k] + w * (values_[k + 1] - values_[k]);
}

template <class T>
bool PiecewiseLinear<T>::is_convex(const T& slack) const {
  for (std::size_t i = 0; i + 2 < knots_.size(); ++i) {
    const T s0 = (values_[i + 1] - values_[i]) / (knots_[i + 1] - knots_[i]);
    const T s1 = (values_[i + 2] - values_[i + 1]) / (knots_[i + 2] - knots_[i + 1]);
    if (s0 - s1 > slack) return false;
  }
  return true;
}

template <class T>
std::pair<T, T> PiecewiseLinear<T>::minimum() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (values_[i] < values_[best]) best = i;
  }
  return {knots_[best], values_[best]};
}

template <class T>
StepFunction<T> PiecewiseLinear<T>::derivative() const {
  std::vector<T> slopes(knots_.size() - 1);
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    slopes[i] = (values_[i + 1] - values_[i]) / (knots_[i + 1] - knots_[i]);
  }
  return StepFunction<T>(knots_, std::move(slopes));
}

template <class T>
PiecewiseLinear<T> antiderivative(const StepFunction<T>& f) {
  std::vector<T> vals(f.breakpoints().size());
  vals[0] = T(0);
  for (std::size_t i = 0; i < f.cells(); ++i) {
    vals[i + 1] = vals[i] + (f.breakpoints()[i + 1] - f.breakpoints()[i]) * f.values()[i];
  }
  return PiecewiseLinear<T>(f.breakpoints(), std::move(vals));
}

template <class T>
PiecewiseLinear<T> convex_envelope(const PiecewiseLinear<T>& f) {
  const auto& xs = f.knots();
  const auto& ys = f.values();
  std::vector<std::size_t> hull;
  hull.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2];
      const std::size_t b = hull[hull.size() - 1];
      // Keep b only if it lies strictly below chord a--i.
      const T cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a]);
      if (cross > T(0)) break;
      hull.pop_back();
    }
    hull.push_back(i);
  }
  std::vector<T> hx(hull.size()), hy(hull.size());
  for (std::size_t i = 0; i < hull.size(); ++i) {
    hx[i] = xs[hull[i]];
    hy[i] = ys[hull[i]];
  }
  return PiecewiseLinear<T>(std::move(hx), std::move(hy));
}

#define SPSLAB_INSTANTIATE(T)                                  \
  template class PiecewiseLinear<T>;                           \
  template PiecewiseLinear<T> antiderivative(const StepFunction<T>&); \
  template PiecewiseLinear<T> convex_envelope(const PiecewiseLinear<T>&);

SPSLAB_INSTANTIATE(double)
SPSLAB_INSTANTIATE(Rational)
#undef SPSLAB_INSTANTIATE

}  // namespace spslab
