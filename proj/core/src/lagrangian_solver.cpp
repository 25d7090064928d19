#include "spslab/lagrangian_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "spslab/tolerances.hpp"

namespace spslab {

template <class T>
LagrangianSolution<T> LagrangianSolution<T>::from_measure(const DiscreteMeasure<T>& mu) {
  return LagrangianSolution<T>{quantile_of(mu), velocity_steps_of(mu)};
}

template <class T>
StepFunction<T> solve_quantile(const LagrangianSolution<T>& sol, const T& t) {
  if (t < T(0)) throw std::invalid_argument("solve_quantile: time must be nonnegative");
  if (t == T(0)) return sol.initial_quantile;
  return pava_isotonic(
      affine_combine(T(1), sol.initial_quantile, t, sol.initial_velocity));
}

template <class T>
DecayCheck<T> generic_decay_check(const LagrangianSolution<T>& sol, const T& t) {
  if (!(t > T(0))) throw std::invalid_argument("generic_decay_check: time must be positive");
  const StepFunction<T> nt = solve_quantile(sol, t);
  const StepFunction<T> vproj = pava_isotonic(sol.initial_velocity);
  const T inv_t = T(1) / t;
  const double lhs = l2_distance(affine_combine(inv_t, nt, T(0), nt), vproj);
  const double rhs = l2_norm(sol.initial_quantile) * to_double(inv_t);
  return DecayCheck<T>{lhs, rhs, lhs <= rhs + tol::kIdentity};
}

template <class T>
ConfinedFlow<T>::ConfinedFlow(EventLog<T> free_log, Domain<T> domain)
    : free_log_(std::move(free_log)), domain_(std::move(domain)) {
  if (!free_log_.domain().is_real_line()) {
    throw std::invalid_argument("confine_flow: the input log must be a free (full line) run");
  }
  if (!free_log_.complete()) {
    throw std::invalid_argument("confine_flow: the free log must be complete");
  }
  const auto& atoms = free_log_.initial_atoms();
  int comp = -1;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const int c = domain_.component_of(atoms[i].position);
    if (c < 0 || (comp >= 0 && c != comp)) {
      throw std::invalid_argument(
          "confine_flow: initial support must sit inside one domain component");
    }
    comp = c;
  }
  const auto& dc = domain_.components()[static_cast<std::size_t>(comp)];

  // Free trajectories are piecewise affine with kinks only at event times;
  // scanning the segments yields each atom's first boundary crossing exactly.
  std::vector<T> times{T(0)};
  for (const auto& e : free_log_.events()) times.push_back(e.time);
  hit_times_.assign(atoms.size(), std::nullopt);
  hit_walls_.assign(atoms.size(), T(0));

  std::vector<std::vector<T>> pos_at(times.size());
  std::vector<std::vector<T>> vel_at(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    pos_at[k] = free_log_.atom_positions(times[k]);
    vel_at[k] = free_log_.atom_velocities(times[k]);
  }
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    for (std::size_t k = 0; k < times.size() && !hit_times_[i]; ++k) {
      const T& p0 = pos_at[k][i];
      const T& v = vel_at[k][i];
      const bool last = k + 1 == times.size();
      auto try_wall = [&](const T& wall) {
        if (v == T(0)) {
          if (p0 == wall) {
            hit_times_[i] = times[k];
            hit_walls_[i] = wall;
          }
          return;
        }
        T dt = (wall - p0) / v;
        if (dt < T(0)) {
          // Float rounding can park the trajectory a hair past the wall at a
          // segment boundary; treat that as an immediate hit.
          if (dt < -ArithmeticTraits<T>::coincidence()) return;
          dt = T(0);
        }
        const T t_hit = times[k] + dt;
        if (!last && times[k + 1] < t_hit) return;
        if (!hit_times_[i] || t_hit < *hit_times_[i]) {
          hit_times_[i] = t_hit;
          hit_walls_[i] = wall;
        }
      };
      if (dc.lower) try_wall(*dc.lower);
      if (dc.upper) try_wall(*dc.upper);
    }
  }
}

template <class T>
T ConfinedFlow<T>::settled_time() const {
  T t = free_log_.equilibrium_time().value_or(T(0));
  for (const auto& h : hit_times_) {
    if (h && t < *h) t = *h;
  }
  return t;
}

template <class T>
std::vector<T> ConfinedFlow<T>::atom_positions(const T& t) const {
  std::vector<T> pos = free_log_.atom_positions(t);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (hit_times_[i] && !(t < *hit_times_[i])) pos[i] = hit_walls_[i];
  }
  return pos;
}

template <class T>
std::vector<T> ConfinedFlow<T>::atom_velocities(const T& t) const {
  std::vector<T> vel = free_log_.atom_velocities(t);
  for (std::size_t i = 0; i < vel.size(); ++i) {
    if (hit_times_[i] && !(t < *hit_times_[i])) vel[i] = T(0);
  }
  return vel;
}

template <class T>
ConfinedFlow<T> confine_flow(EventLog<T> free_log, Domain<T> domain) {
  return ConfinedFlow<T>(std::move(free_log), std::move(domain));
}

template <class T>
ConfinedSolution<T>::ConfinedSolution(const DiscreteMeasure<T>& initial, Domain<T> domain) {
  const auto& atoms = initial.atoms();
  masses_.reserve(atoms.size());
  for (const auto& a : atoms) masses_.push_back(a.mass);

  std::vector<std::vector<Atom<T>>> parts(domain.component_count());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const int c = domain.component_of(atoms[i].position);
    if (c < 0) {
      throw std::invalid_argument("confined solution: atom " + std::to_string(i) +
                                  " lies outside the domain");
    }
    parts[static_cast<std::size_t>(c)].push_back(atoms[i]);
  }
  for (auto& part : parts) {
    if (part.empty()) continue;
    flows_.push_back(ConfinedFlow<T>(simulate(std::move(part), Domain<T>::real_line()), domain));
  }
}

template <class T>
std::vector<T> ConfinedSolution<T>::atom_positions(const T& t) const {
  std::vector<T> out;
  out.reserve(masses_.size());
  for (const auto& flow : flows_) {
    const auto part = flow.atom_positions(t);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

template <class T>
StepFunction<T> ConfinedSolution<T>::quantile_at(const T& t) const {
  const auto pos = atom_positions(t);
  std::vector<T> bp(pos.size() + 1);
  bp[0] = T(0);
  T cum(0);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    cum += masses_[i];
    bp[i + 1] = cum;
  }
  bp.back() = T(1);
  return StepFunction<T>(std::move(bp), pos);
}

template <class T>
T ConfinedSolution<T>::settled_time() const {
  T t(0);
  for (const auto& flow : flows_) {
    const T s = flow.settled_time();
    if (t < s) t = s;
  }
  return t;
}

template <class T>
EquivalenceReport<T> confinement_equivalence(const DiscreteMeasure<T>& initial,
                                             const Domain<T>& domain,
                                             std::size_t samples, double tolerance) {
  if (domain.is_real_line()) {
    throw std::invalid_argument("confinement_equivalence: needs a domain with walls");
  }
  EventLog<T> native = simulate(initial, domain);
  ConfinedSolution<T> confined(initial, domain);

  const double t_native = to_double(native.equilibrium_time().value_or(T(0)));
  const double t_conf = to_double(confined.settled_time());
  const double t_max = 1.25 * std::max(t_native, t_conf) + 0.5;

  EquivalenceReport<T> report{0.0, std::nullopt, true};
  for (std::size_t k = 0; k < samples; ++k) {
    const double td = t_max * static_cast<double>(k) / static_cast<double>(samples - 1);
    const T t = from_double<T>(td);
    const double w2 = l2_distance(native.quantile_at(t), confined.quantile_at(t));
    if (w2 > report.max_w2) report.max_w2 = w2;
    if (w2 > tolerance && !report.first_divergence_time) report.first_divergence_time = td;
  }
  report.ok = !report.first_divergence_time.has_value();
  return report;
}

template <class T>
OleinikReport<T> oleinik_check(const EventLog<T>& log, const T& t, double tolerance) {
  if (!(t > T(0))) throw std::invalid_argument("oleinik_check: time must be positive");
  const auto clusters = log.clusters_at(t);
  const auto& domain = log.domain();
  const double td = to_double(t);
  const double bound = 1.0 / td;

  OleinikReport<T> report{std::nullopt, bound, true, true, true, bound};
  auto update = [&](double margin, bool& flag) {
    if (margin < -tolerance) flag = false;
    if (margin < report.worst_margin) report.worst_margin = margin;
  };

  for (std::size_t i = 0; i + 1 < clusters.size(); ++i) {
    const auto& a = clusters[i];
    const auto& b = clusters[i + 1];
    if (domain.component_of(a.position) != domain.component_of(b.position)) continue;
    const double q =
        to_double((b.velocity - a.velocity) / (b.position - a.position));
    if (!report.max_quotient || q > *report.max_quotient) report.max_quotient = q;
    update(bound - q, report.quotient_ok);
  }
  for (const auto& c : clusters) {
    const int comp = domain.component_of(c.position);
    if (comp < 0) continue;
    const auto& dc = domain.components()[static_cast<std::size_t>(comp)];
    const double v = to_double(c.velocity);
    const double y = to_double(c.position);
    if (dc.lower) update((y - to_double(*dc.lower)) / td - v, report.sided_ok);
    if (dc.upper) update(v - (y - to_double(*dc.upper)) / td, report.sided_ok);
    if (dc.bounded()) {
      const double width = to_double(*dc.upper) - to_double(*dc.lower);
      update(width / td - std::abs(v), report.uniform_ok);
    }
  }
  return report;
}

template <class T>
T flow_identity_residual(const EventLog<T>& log, const T& s, const T& t) {
  if (s < T(0) || t < s) {
    throw std::invalid_argument("flow_identity_residual: needs 0 <= s <= t");
  }
  const auto xt = log.atom_positions(t);
  const auto xs = log.atom_positions(s);
  const auto& atoms = log.initial_atoms();
  T acc(0);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    acc += atoms[i].mass * xt[i] * (xs[i] - atoms[i].position - s * atoms[i].velocity);
  }
  return abs_value(acc);
}

#define SPSLAB_INSTANTIATE(T)                                                           \
  template struct LagrangianSolution<T>;                                                \
  template StepFunction<T> solve_quantile(const LagrangianSolution<T>&, const T&);      \
  template DecayCheck<T> generic_decay_check(const LagrangianSolution<T>&, const T&);   \
  template class ConfinedFlow<T>;                                                       \
  template ConfinedFlow<T> confine_flow(EventLog<T>, Domain<T>);                        \
  template class ConfinedSolution<T>;                                                   \
  template EquivalenceReport<T> confinement_equivalence(const DiscreteMeasure<T>&,      \
                                                        const Domain<T>&, std::size_t,  \
                                                        double);                        \
  template OleinikReport<T> oleinik_check(const EventLog<T>&, const T&, double);        \
  template T flow_identity_residual(const EventLog<T>&, const T&, const T&);

SPSLAB_INSTANTIATE(double)
SPSLAB_INSTANTIATE(Rational)
#undef SPSLAB_INSTANTIATE

}  // namespace spslab
