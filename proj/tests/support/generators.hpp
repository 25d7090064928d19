#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "spslab/measure.hpp"
#include "spslab/scalar.hpp"

namespace spslab::testgen {

/// Masses k / 2^p summing to 1 exactly: a random composition of the grain
/// count. Exact in both scalar modes.
template <class T>
std::vector<T> dyadic_masses(std::mt19937_64& rng, std::size_t n, int p = 10) {
  const std::int64_t grains = std::int64_t(1) << p;
  std::vector<std::int64_t> cuts{0, grains};
  std::uniform_int_distribution<std::int64_t> pick(1, grains - 1);
  while (cuts.size() < n + 1) {
    const std::int64_t c = pick(rng);
    if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<T> masses;
  masses.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    masses.push_back(from_fraction<T>(cuts[i + 1] - cuts[i], grains));
  return masses;
}

/// One dyadic value k / 2^p inside [lo, hi] (bounds given in grains).
template <class T>
T dyadic_between(std::mt19937_64& rng, std::int64_t lo_grains, std::int64_t hi_grains,
                 int p) {
  std::uniform_int_distribution<std::int64_t> pick(lo_grains, hi_grains);
  return from_fraction<T>(pick(rng), std::int64_t(1) << p);
}

/// Strictly increasing dyadic positions in the open grain range.
template <class T>
std::vector<T> distinct_positions(std::mt19937_64& rng, std::size_t n,
                                  std::int64_t lo_grains, std::int64_t hi_grains, int p) {
  std::vector<std::int64_t> picked;
  std::uniform_int_distribution<std::int64_t> pick(lo_grains, hi_grains);
  while (picked.size() < n) {
    const std::int64_t c = pick(rng);
    if (std::find(picked.begin(), picked.end(), c) == picked.end()) picked.push_back(c);
  }
  std::sort(picked.begin(), picked.end());
  std::vector<T> out;
  out.reserve(n);
  for (const std::int64_t c : picked) out.push_back(from_fraction<T>(c, std::int64_t(1) << p));
  return out;
}

/// Free-line scenario: dyadic masses, positions in (-2, 2), velocities in
/// [-2, 2] on a 2^-6 grid.
template <class T>
std::vector<Atom<T>> free_atoms(std::mt19937_64& rng, std::size_t n) {
  const auto masses = dyadic_masses<T>(rng, n);
  const auto positions = distinct_positions<T>(rng, n, -(1 << 13) + 1, (1 << 13) - 1, 12);
  std::vector<Atom<T>> atoms;
  atoms.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    atoms.push_back({masses[i], positions[i],
                     dyadic_between<T>(rng, -(1 << 7), 1 << 7, 6)});
  return atoms;
}

/// Box scenario on [0, 1]: positions interior, velocities free to hit walls.
template <class T>
std::vector<Atom<T>> box_atoms(std::mt19937_64& rng, std::size_t n) {
  const auto masses = dyadic_masses<T>(rng, n);
  const auto positions = distinct_positions<T>(rng, n, 1, (1 << 12) - 1, 12);
  std::vector<Atom<T>> atoms;
  atoms.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    atoms.push_back({masses[i], positions[i],
                     dyadic_between<T>(rng, -(1 << 7), 1 << 7, 6)});
  return atoms;
}

/// In-hull scenario on [0, 1]: total momentum removed exactly, then the
/// (mass, velocity) pairs are rotated so every prefix momentum is >= 0 with
/// the total exactly 0 (a rotation with that property always exists). The
/// running velocity primitive then stays nonnegative and ends at 0, so the
/// free flow never leaves the support hull and walls stay untouched.
template <class T>
std::vector<Atom<T>> confined_atoms(std::mt19937_64& rng, std::size_t n) {
  const auto masses = dyadic_masses<T>(rng, n);
  const auto positions =
      distinct_positions<T>(rng, n, (1 << 12) / 8, (7 * (1 << 12)) / 8, 12);
  std::vector<T> velocities;
  velocities.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    velocities.push_back(dyadic_between<T>(rng, -(1 << 7), 1 << 7, 6));

  T total(0);
  for (std::size_t i = 0; i < n; ++i) total += masses[i] * velocities[i];
  for (auto& v : velocities) v -= total;  // unit total mass

  std::size_t pivot = 0;
  T prefix(0), lowest(0);
  for (std::size_t i = 0; i < n; ++i) {
    prefix += masses[i] * velocities[i];
    if (prefix < lowest) {
      lowest = prefix;
      pivot = i + 1;
    }
  }
  std::vector<Atom<T>> atoms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (pivot + i) % n;
    atoms[i] = {masses[j], positions[i], velocities[j]};
  }
  return atoms;
}

}  // namespace spslab::testgen
