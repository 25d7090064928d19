#include "spslab/domain.hpp"

#include <stdexcept>
#include <string>

namespace spslab {

template <class T>
Domain<T> Domain<T>::real_line() {
  return Domain({DomainComponent<T>{std::nullopt, std::nullopt}});
}

template <class T>
Domain<T> Domain<T>::interval(T a, T b) {
  return union_of({DomainComponent<T>{std::move(a), std::move(b)}});
}

template <class T>
Domain<T> Domain<T>::left_ray(T b) {
  return Domain({DomainComponent<T>{std::nullopt, std::move(b)}});
}

template <class T>
Domain<T> Domain<T>::right_ray(T a) {
  return Domain({DomainComponent<T>{std::move(a), std::nullopt}});
}

template <class T>
Domain<T> Domain<T>::union_of(std::vector<DomainComponent<T>> components) {
  if (components.empty()) {
    throw std::invalid_argument("domain: needs at least one component");
  }
  std::string problems;
  for (std::size_t i = 0; i < components.size(); ++i) {
    const auto& c = components[i];
    if (c.lower && c.upper && !(*c.lower < *c.upper)) {
      problems += "component " + std::to_string(i) + ": lower must be < upper; ";
    }
    if (i + 1 < components.size()) {
      const auto& next = components[i + 1];
      if (!c.upper || !next.lower) {
        problems += "component " + std::to_string(i) +
                    ": interior components must be bounded on the shared side; ";
      } else if (!(*c.upper < *next.lower)) {
        problems += "components " + std::to_string(i) + "," + std::to_string(i + 1) +
                    ": closures must be disjoint and sorted; ";
      }
    }
  }
  if (!problems.empty()) {
    throw std::invalid_argument("domain: " + problems);
  }
  return Domain(std::move(components));
}

template <class T>
bool Domain<T>::is_real_line() const {
  return components_.size() == 1 && !components_[0].lower && !components_[0].upper;
}

template <class T>
int Domain<T>::component_of(const T& y) const {
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    const bool above = !c.lower || !(y < *c.lower);
    const bool below = !c.upper || !(*c.upper < y);
    if (above && below) return static_cast<int>(i);
  }
  return -1;
}

template <class T>
bool Domain<T>::is_boundary(const T& y) const {
  for (const auto& c : components_) {
    if ((c.lower && *c.lower == y) || (c.upper && *c.upper == y)) return true;
  }
  return false;
}

template class Domain<double>;
template class Domain<Rational>;

}  // namespace spslab
