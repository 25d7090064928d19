#include "spslab/particle_engine.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace spslab {

namespace {

template <class T>
T member_mass(const std::vector<Atom<T>>& atoms, std::size_t first, std::size_t last) {
  T m(0);
  for (std::size_t i = first; i <= last; ++i) m += atoms[i].mass;
  return m;
}

template <class T>
T member_momentum(const std::vector<Atom<T>>& atoms, std::size_t first, std::size_t last) {
  T p(0);
  for (std::size_t i = first; i <= last; ++i) p += atoms[i].mass * atoms[i].velocity;
  return p;
}

template <class T>
struct Candidate {
  T time;
  T position;
  std::size_t lo, hi;  // cluster index range involved
  bool wall;
  T wall_coord;
};

}  // namespace

template <class T>
Cluster<T> merge_clusters(const std::vector<Cluster<T>>& participants,
                          const std::vector<Atom<T>>& atoms,
                          const std::optional<T>& wall_position) {
  if (participants.empty()) {
    throw std::invalid_argument("merge_clusters: needs at least one participant");
  }
  std::size_t first = participants.front().first_atom;
  std::size_t last = participants.front().last_atom;
  for (const auto& c : participants) {
    first = std::min(first, c.first_atom);
    last = std::max(last, c.last_atom);
  }
  std::size_t span = 0;
  for (const auto& c : participants) span += c.last_atom - c.first_atom + 1;
  if (span != last - first + 1) {
    throw std::invalid_argument("merge_clusters: participants must cover a contiguous atom range");
  }
  Cluster<T> out;
  out.first_atom = first;
  out.last_atom = last;
  out.mass = member_mass(atoms, first, last);
  if (wall_position) {
    out.position = *wall_position;
    out.velocity = T(0);
    out.stuck = true;
  } else {
    for (const auto& c : participants) {
      if (c.stuck) {
        throw std::invalid_argument("merge_clusters: frozen participant outside a wall merge");
      }
    }
    T wpos(0);
    for (const auto& c : participants) wpos += c.mass * c.position;
    out.position = wpos / out.mass;
    out.velocity = member_momentum(atoms, first, last) / out.mass;
    out.stuck = false;
  }
  return out;
}

template <class T>
std::optional<CollisionEvent<T>> next_event(const std::vector<Cluster<T>>& clusters,
                                            const std::vector<Atom<T>>& atoms,
                                            const Domain<T>& domain, const T& now) {
  const T eps = ArithmeticTraits<T>::coincidence();
  std::vector<Candidate<T>> cands;

  for (std::size_t i = 0; i + 1 < clusters.size(); ++i) {
    const Cluster<T>& a = clusters[i];
    const Cluster<T>& b = clusters[i + 1];
    if (domain.component_of(a.position) != domain.component_of(b.position)) continue;
    const T dv = a.velocity - b.velocity;
    if (!(dv > T(0))) continue;  // separating or parallel; equal speeds never meet
    T dt = (b.position - a.position) / dv;
    if (dt < T(0)) dt = T(0);  // float stragglers from an equal-time group
    cands.push_back(Candidate<T>{now + dt, a.position + a.velocity * dt, i, i + 1, false, T(0)});
  }
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const Cluster<T>& c = clusters[i];
    if (c.stuck) continue;
    const int comp = domain.component_of(c.position);
    if (comp < 0) continue;
    const auto& dc = domain.components()[static_cast<std::size_t>(comp)];
    if (c.velocity < T(0) && dc.lower) {
      T dt = (c.position - *dc.lower) / -c.velocity;
      if (dt < T(0)) dt = T(0);
      cands.push_back(Candidate<T>{now + dt, *dc.lower, i, i, true, *dc.lower});
    } else if (c.velocity > T(0) && dc.upper) {
      T dt = (*dc.upper - c.position) / c.velocity;
      if (dt < T(0)) dt = T(0);
      cands.push_back(Candidate<T>{now + dt, *dc.upper, i, i, true, *dc.upper});
    }
  }
  if (cands.empty()) return std::nullopt;

  const Candidate<T>* first = &cands.front();
  for (const auto& c : cands) {
    if (c.time < first->time || (c.time == first->time && c.position < first->position)) {
      first = &c;
    }
  }
  // Group everything happening at the same time and place (within the
  // per-mode slack); chained adjacent meetings collapse into one multi-merge.
  const T t_star = first->time;
  const T p_star = first->position;
  std::size_t lo = first->lo, hi = first->hi;
  bool wall = false;
  T wall_coord = first->wall_coord;
  for (const auto& c : cands) {
    if (abs_value(c.time - t_star) <= eps && abs_value(c.position - p_star) <= eps) {
      lo = std::min(lo, c.lo);
      hi = std::max(hi, c.hi);
      if (c.wall) {
        wall = true;
        wall_coord = c.wall_coord;
      }
    }
  }
  // Wall backstop: a meeting exactly on (or, after float rounding, marginally
  // past) a boundary coordinate is a wall event.
  if (!wall) {
    const int comp = domain.component_of(clusters[lo].position);
    if (comp >= 0) {
      const auto& dc = domain.components()[static_cast<std::size_t>(comp)];
      if (dc.lower && !(*dc.lower < p_star)) {
        wall = true;
        wall_coord = *dc.lower;
      } else if (dc.upper && !(p_star < *dc.upper)) {
        wall = true;
        wall_coord = *dc.upper;
      }
    }
  }

  CollisionEvent<T> ev;
  ev.time = t_star;
  ev.position = wall ? wall_coord : p_star;
  ev.kind = wall ? EventKind::kWallAbsorption : EventKind::kInteriorMerge;
  const T dt = t_star - now;
  for (std::size_t i = lo; i <= hi; ++i) {
    Cluster<T> snap = clusters[i];
    snap.position = snap.position + snap.velocity * dt;
    ev.participants.push_back(std::move(snap));
  }
  ev.resulting = merge_clusters(ev.participants, atoms,
                                wall ? std::optional<T>(wall_coord) : std::nullopt);
  return ev;
}

template <class T>
EventLog<T> simulate(std::vector<Atom<T>> atoms, Domain<T> domain, std::optional<T> horizon) {
  atoms = normalized_atoms(std::move(atoms));
  std::string problems;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!domain.contains(atoms[i].position)) {
      problems += "atom " + std::to_string(i) + " at " + std::to_string(to_double(atoms[i].position)) +
                  " lies outside the domain; ";
    }
  }
  if (!problems.empty()) throw std::invalid_argument("simulate: " + problems);

  EventLog<T> log;
  log.initial_ = atoms;
  log.domain_ = domain;
  log.horizon_ = horizon;

  std::vector<Cluster<T>> clusters;
  clusters.reserve(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    Cluster<T> c{atoms[i].mass, atoms[i].position, atoms[i].velocity, i, i, false};
    if (domain.is_boundary(c.position)) {
      c.velocity = T(0);
      c.stuck = true;
    }
    clusters.push_back(std::move(c));
  }
  log.snapshots_.push_back(clusters);
  log.snapshot_times_.push_back(T(0));

  const std::size_t max_events = atoms.size() + 2 * domain.component_count() + 2;
  T now(0);
  while (true) {
    auto ev = next_event(clusters, atoms, domain, now);
    if (!ev) {
      log.complete_ = true;
      log.equilibrium_time_ = log.events_.empty() ? T(0) : log.events_.back().time;
      break;
    }
    if (horizon && *horizon < ev->time) {
      log.complete_ = false;
      break;
    }
    const T dt = ev->time - now;
    for (auto& c : clusters) c.position = c.position + c.velocity * dt;
    const std::size_t lo = [&] {
      for (std::size_t i = 0; i < clusters.size(); ++i) {
        if (clusters[i].first_atom == ev->resulting.first_atom) return i;
      }
      throw std::logic_error("simulate: lost track of the merge range");
    }();
    std::size_t hi = lo;
    while (clusters[hi].last_atom != ev->resulting.last_atom) ++hi;
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(lo),
                   clusters.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    clusters.insert(clusters.begin() + static_cast<std::ptrdiff_t>(lo), ev->resulting);
    now = ev->time;
    log.events_.push_back(std::move(*ev));
    log.snapshots_.push_back(clusters);
    log.snapshot_times_.push_back(now);
    if (log.events_.size() > max_events) {
      throw std::logic_error("simulate: event count exceeded the termination bound");
    }
  }
  return log;
}

template <class T>
std::size_t EventLog<T>::interior_merge_count() const {
  std::size_t n = 0;
  for (const auto& e : events_) n += e.kind == EventKind::kInteriorMerge ? 1 : 0;
  return n;
}

template <class T>
std::size_t EventLog<T>::wall_event_count() const {
  return events_.size() - interior_merge_count();
}

template <class T>
std::vector<Cluster<T>> EventLog<T>::clusters_at(const T& t) const {
  if (t < T(0)) throw std::invalid_argument("clusters_at: time must be nonnegative");
  if (!complete_ && horizon_ && *horizon_ < t) {
    throw std::out_of_range("clusters_at: query beyond the simulated horizon");
  }
  auto it = std::upper_bound(snapshot_times_.begin(), snapshot_times_.end(), t);
  const auto idx = static_cast<std::size_t>(it - snapshot_times_.begin()) - 1;
  std::vector<Cluster<T>> out = snapshots_[idx];
  const T dt = t - snapshot_times_[idx];
  for (auto& c : out) c.position = c.position + c.velocity * dt;
  return out;
}

template <class T>
std::vector<T> EventLog<T>::atom_positions(const T& t) const {
  const auto clusters = clusters_at(t);
  std::vector<T> pos(initial_.size());
  for (const auto& c : clusters) {
    for (std::size_t i = c.first_atom; i <= c.last_atom; ++i) pos[i] = c.position;
  }
  return pos;
}

template <class T>
std::vector<T> EventLog<T>::atom_velocities(const T& t) const {
  const auto clusters = clusters_at(t);
  std::vector<T> vel(initial_.size());
  for (const auto& c : clusters) {
    for (std::size_t i = c.first_atom; i <= c.last_atom; ++i) vel[i] = c.velocity;
  }
  return vel;
}

template <class T>
DiscreteMeasure<T> EventLog<T>::state_at(const T& t) const {
  const auto clusters = clusters_at(t);
  std::vector<Atom<T>> atoms(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    atoms[i] = Atom<T>{clusters[i].mass, clusters[i].position, clusters[i].velocity};
  }
  return DiscreteMeasure<T>(std::move(atoms));
}

template <class T>
StepFunction<T> EventLog<T>::quantile_at(const T& t) const {
  const auto clusters = clusters_at(t);
  std::vector<T> bp(clusters.size() + 1);
  std::vector<T> vals(clusters.size());
  bp[0] = T(0);
  T cum(0);
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    cum += clusters[i].mass;
    bp[i + 1] = cum;
    vals[i] = clusters[i].position;
  }
  bp.back() = T(1);
  return StepFunction<T>(std::move(bp), std::move(vals));
}

template <class T>
std::vector<T> EventLog<T>::velocity_profile(const T& t) const {
  const auto clusters = clusters_at(t);
  std::vector<T> out(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const Cluster<T>& c = clusters[i];
    out[i] = c.stuck ? T(0)
                     : member_momentum(initial_, c.first_atom, c.last_atom) /
                           member_mass(initial_, c.first_atom, c.last_atom);
  }
  return out;
}

template <class T>
T EventLog<T>::energy_at(const T& t) const {
  T acc(0);
  for (const auto& c : clusters_at(t)) acc += c.mass * c.velocity * c.velocity;
  return acc;
}

#define SPSLAB_INSTANTIATE(T)                                                             \
  template Cluster<T> merge_clusters(const std::vector<Cluster<T>>&,                      \
                                     const std::vector<Atom<T>>&, const std::optional<T>&); \
  template std::optional<CollisionEvent<T>> next_event(const std::vector<Cluster<T>>&,    \
                                                       const std::vector<Atom<T>>&,       \
                                                       const Domain<T>&, const T&);       \
  template class EventLog<T>;                                                             \
  template EventLog<T> simulate(std::vector<Atom<T>>, Domain<T>, std::optional<T>);

SPSLAB_INSTANTIATE(double)
SPSLAB_INSTANTIATE(Rational)
#undef SPSLAB_INSTANTIATE

}  // namespace spslab
