#include "spslab/measure.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace spslab {

template <class T>
std::vector<Atom<T>> normalized_atoms(std::vector<Atom<T>> atoms) {
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!(atoms[i].mass > T(0))) {
      throw std::invalid_argument("atom " + std::to_string(i) + ": mass must be positive");
    }
  }
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const Atom<T>& a, const Atom<T>& b) { return a.position < b.position; });
  const T eps = ArithmeticTraits<T>::coincidence();
  std::vector<Atom<T>> out;
  out.reserve(atoms.size());
  for (auto& a : atoms) {
    if (!out.empty() && !(eps < a.position - out.back().position)) {
      Atom<T>& b = out.back();
      const T mass = b.mass + a.mass;
      b.position = (b.mass * b.position + a.mass * a.position) / mass;
      b.velocity = (b.mass * b.velocity + a.mass * a.velocity) / mass;
      b.mass = mass;
    } else {
      out.push_back(std::move(a));
    }
  }
  return out;
}

template <class T>
DiscreteMeasure<T>::DiscreteMeasure(std::vector<Atom<T>> atoms)
    : atoms_(normalized_atoms(std::move(atoms))) {
  std::string problems;
  if (atoms_.empty()) problems += "needs at least one atom; ";
  T total(0);
  for (const auto& a : atoms_) total += a.mass;
  const T gap = abs_value(total - T(1));
  if (ArithmeticTraits<T>::is_exact ? gap != T(0) : !(gap <= T(ArithmeticTraits<double>::coincidence()))) {
    problems += "masses must sum to 1 (got " + std::to_string(to_double(total)) + "); ";
  }
  if (!problems.empty()) {
    throw std::invalid_argument("measure: " + problems);
  }
}

template <class T>
DiscreteMeasure<T> DiscreteMeasure<T>::delta(T position, T velocity) {
  return DiscreteMeasure({Atom<T>{T(1), std::move(position), std::move(velocity)}});
}

template <class T>
T DiscreteMeasure<T>::mean_position() const {
  T s(0);
  for (const auto& a : atoms_) s += a.mass * a.position;
  return s;
}

template <class T>
T DiscreteMeasure<T>::momentum() const {
  T s(0);
  for (const auto& a : atoms_) s += a.mass * a.velocity;
  return s;
}

template <class T>
T DiscreteMeasure<T>::energy() const {
  T s(0);
  for (const auto& a : atoms_) s += a.mass * a.velocity * a.velocity;
  return s;
}

template <class T>
DiscreteMeasure<T> pushforward(const DiscreteMeasure<T>& mu, const std::vector<T>& positions) {
  if (positions.size() != mu.size()) {
    throw std::invalid_argument("pushforward: position assignment size mismatch");
  }
  std::vector<Atom<T>> mapped = mu.atoms();
  for (std::size_t i = 0; i < mapped.size(); ++i) mapped[i].position = positions[i];
  return DiscreteMeasure<T>(std::move(mapped));
}

template std::vector<Atom<double>> normalized_atoms(std::vector<Atom<double>>);
template std::vector<Atom<Rational>> normalized_atoms(std::vector<Atom<Rational>>);
template class DiscreteMeasure<double>;
template class DiscreteMeasure<Rational>;
template DiscreteMeasure<double> pushforward(const DiscreteMeasure<double>&, const std::vector<double>&);
template DiscreteMeasure<Rational> pushforward(const DiscreteMeasure<Rational>&, const std::vector<Rational>&);

}  // namespace spslab
