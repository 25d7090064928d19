#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "spslab/domain.hpp"
#include "spslab/measure.hpp"
#include "spslab/step_function.hpp"

namespace spslab {

/// A rigid group of consecutive atoms travelling together. Member indices
/// refer to the normalized initial atom list and are always contiguous (1D
/// collisions preserve order). Wall-frozen clusters have stuck = true and
/// velocity 0.
template <class T>
struct Cluster {
  T mass;
  T position;
  T velocity;
  std::size_t first_atom;
  std::size_t last_atom;  // inclusive
  bool stuck = false;
};

enum class EventKind { kInteriorMerge, kWallAbsorption };

template <class T>
struct CollisionEvent {
  T time;
  T position;
  /// Pre-merge snapshots advanced to the event time. A single participant
  /// means a bare wall hit.
  std::vector<Cluster<T>> participants;
  Cluster<T> resulting;
  EventKind kind;
};

/// Merges co-located clusters into one. The interior rule takes the momentum
/// mean recomputed from the member atoms' initial momenta (exact for dyadic
/// data); the wall rule pins the result at `wall_position` with velocity 0.
template <class T>
Cluster<T> merge_clusters(const std::vector<Cluster<T>>& participants,
                          const std::vector<Atom<T>>& atoms,
                          const std::optional<T>& wall_position);

/// Earliest upcoming event for the given cluster state: adjacent-pair meeting
/// times plus wall hit times, grouped by coincident (time, position) with the
/// wall winning ties. Returns nullopt at equilibrium or free dispersal.
template <class T>
std::optional<CollisionEvent<T>> next_event(const std::vector<Cluster<T>>& clusters,
                                            const std::vector<Atom<T>>& atoms,
                                            const Domain<T>& domain, const T& now);

/// Full trajectory record of one simulation.
template <class T>
class EventLog {
 public:
  const std::vector<Atom<T>>& initial_atoms() const { return initial_; }
  const Domain<T>& domain() const { return domain_; }
  const std::vector<CollisionEvent<T>>& events() const { return events_; }
  /// True when no further event will ever occur.
  bool complete() const { return complete_; }
  /// Time of the last event (0 when none); present iff the log is complete.
  const std::optional<T>& equilibrium_time() const { return equilibrium_time_; }
  const std::optional<T>& horizon() const { return horizon_; }

  std::size_t interior_merge_count() const;
  std::size_t wall_event_count() const;

  /// Cluster state at time t >= 0 (right-continuous at event times). Querying
  /// past the horizon of an incomplete log throws std::out_of_range.
  std::vector<Cluster<T>> clusters_at(const T& t) const;
  std::vector<T> atom_positions(const T& t) const;
  std::vector<T> atom_velocities(const T& t) const;
  /// Requires unit total mass.
  DiscreteMeasure<T> state_at(const T& t) const;
  StepFunction<T> quantile_at(const T& t) const;
  /// Per-cluster velocities realized as the conditional mean of the initial
  /// velocities given the cluster membership, 0 for wall-frozen clusters.
  /// Equal to the flight velocities stored in the clusters.
  std::vector<T> velocity_profile(const T& t) const;
  /// Sum of m v^2 over clusters at t.
  T energy_at(const T& t) const;

 private:
  template <class U>
  friend EventLog<U> simulate(std::vector<Atom<U>> atoms, Domain<U> domain,
                              std::optional<U> horizon);

  std::vector<Atom<T>> initial_;
  Domain<T> domain_{Domain<T>::real_line()};
  std::vector<CollisionEvent<T>> events_;
  std::vector<std::vector<Cluster<T>>> snapshots_;  // [0] initial, [k+1] after event k
  std::vector<T> snapshot_times_;
  bool complete_ = false;
  std::optional<T> equilibrium_time_;
  std::optional<T> horizon_;
};

/// Runs the sticky dynamics from sorted normalized atoms (masses need not sum
/// to 1). Atoms must lie in the domain closure; atoms starting on a boundary
/// are frozen from t = 0 without a logged event. With a horizon the log may be
/// incomplete; otherwise it runs to completion, which always terminates.
template <class T>
EventLog<T> simulate(std::vector<Atom<T>> atoms, Domain<T> domain,
                     std::optional<T> horizon = std::nullopt);

template <class T>
EventLog<T> simulate(const DiscreteMeasure<T>& initial, Domain<T> domain,
                     std::optional<T> horizon = std::nullopt) {
  return simulate(initial.atoms(), std::move(domain), std::move(horizon));
}

}  // namespace spslab
