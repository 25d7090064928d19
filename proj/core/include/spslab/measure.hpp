#pragma once

#include <cstddef>
#include <vector>

#include "spslab/scalar.hpp"

namespace spslab {

template <class T>
struct Atom {
  T mass{};
  T position{};
  T velocity{};
};

/// Sorts by position and merges atoms closer than the per-mode coincidence
/// slack (exact equality in rational mode). Merged atoms carry summed mass,
/// mass-weighted position and momentum-mean velocity. Masses must be positive.
template <class T>
std::vector<Atom<T>> normalized_atoms(std::vector<Atom<T>> atoms);

/// Finitely supported probability measure with a velocity attached to each
/// atom. Atoms are sorted with strictly increasing positions; masses are
/// positive and sum to 1 (within 1e-12 in float mode, exactly in rational
/// mode). Violations throw std::invalid_argument listing every problem.
template <class T>
class DiscreteMeasure {
 public:
  explicit DiscreteMeasure(std::vector<Atom<T>> atoms);
  static DiscreteMeasure delta(T position, T velocity = T{});

  const std::vector<Atom<T>>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

  T mean_position() const;
  T momentum() const;
  /// Sum of m v^2 (the kinetic diagnostic reported in time series).
  T energy() const;

 private:
  std::vector<Atom<T>> atoms_;
};

/// Applies a per-atom position assignment and renormalizes: atoms landing at
/// coincident positions are merged with summed mass and momentum-mean
/// velocity, output sorted. `positions` must match the atom count.
template <class T>
DiscreteMeasure<T> pushforward(const DiscreteMeasure<T>& mu,
                               const std::vector<T>& positions);

}  // namespace spslab
