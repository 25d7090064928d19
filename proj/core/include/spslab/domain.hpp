#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "spslab/scalar.hpp"

namespace spslab {

/// One closed connected component [lower, upper]; an absent end is unbounded.
template <class T>
struct DomainComponent {
  std::optional<T> lower;
  std::optional<T> upper;

  bool bounded() const { return lower.has_value() && upper.has_value(); }
};

/// Closed subset of the line made of finitely many components with disjoint
/// closures. Components are kept sorted left to right.
template <class T>
class Domain {
 public:
  static Domain real_line();
  static Domain interval(T a, T b);
  static Domain left_ray(T b);   // (-inf, b]
  static Domain right_ray(T a);  // [a, +inf)
  /// Validates ordering and disjointness; throws std::invalid_argument.
  static Domain union_of(std::vector<DomainComponent<T>> components);

  const std::vector<DomainComponent<T>>& components() const { return components_; }
  std::size_t component_count() const { return components_.size(); }
  bool is_real_line() const;

  bool contains(const T& y) const { return component_of(y) >= 0; }
  /// Index of the component whose closure contains y, or -1.
  int component_of(const T& y) const;
  bool is_boundary(const T& y) const;

 private:
  explicit Domain(std::vector<DomainComponent<T>> components)
      : components_(std::move(components)) {}

  std::vector<DomainComponent<T>> components_;
};

}  // namespace spslab
