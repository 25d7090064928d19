#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "spslab/cone_projection.hpp"
#include "spslab/domain.hpp"
#include "spslab/particle_engine.hpp"
#include "spslab/step_function.hpp"

namespace spslab {

/// Closed-form solution data on the full line: the initial quantile and the
/// initial velocity rearranged onto the same mass partition.
template <class T>
struct LagrangianSolution {
  StepFunction<T> initial_quantile;
  StepFunction<T> initial_velocity;

  static LagrangianSolution from_measure(const DiscreteMeasure<T>& mu);
};

/// Quantile of the free solution at time t >= 0: the monotone projection of
/// initial_quantile + t * initial_velocity.
template <class T>
StepFunction<T> solve_quantile(const LagrangianSolution<T>& sol, const T& t);

template <class T>
struct DecayCheck {
  double lhs;  // || N(t)/t - projected initial velocity ||
  double rhs;  // || N(0) || / t
  bool ok;
};

/// Large-time decay estimate at time t > 0; equality is attained exactly for
/// a single atom at 1/2 with unit velocity.
template <class T>
DecayCheck<T> generic_decay_check(const LagrangianSolution<T>& sol, const T& t);

/// Per-atom freezing of a free trajectory set at the walls of one domain
/// component: each atom follows its free path until the first boundary hit,
/// then stays at the wall forever.
template <class T>
class ConfinedFlow {
 public:
  ConfinedFlow(EventLog<T> free_log, Domain<T> domain);

  const EventLog<T>& free_log() const { return free_log_; }
  const std::vector<std::optional<T>>& hit_times() const { return hit_times_; }
  /// Latest free event or wall hit; the flow is affine beyond it.
  T settled_time() const;

  std::vector<T> atom_positions(const T& t) const;
  std::vector<T> atom_velocities(const T& t) const;

 private:
  EventLog<T> free_log_;
  Domain<T> domain_;
  std::vector<std::optional<T>> hit_times_;
  std::vector<T> hit_walls_;
};

template <class T>
ConfinedFlow<T> confine_flow(EventLog<T> free_log, Domain<T> domain);

/// Wall solution assembled from per-component free flows (the initial measure
/// may span several components).
template <class T>
class ConfinedSolution {
 public:
  ConfinedSolution(const DiscreteMeasure<T>& initial, Domain<T> domain);

  std::vector<T> atom_positions(const T& t) const;
  StepFunction<T> quantile_at(const T& t) const;
  T settled_time() const;

 private:
  std::vector<ConfinedFlow<T>> flows_;
  std::vector<T> masses_;
};

template <class T>
struct EquivalenceReport {
  double max_w2;
  std::optional<double> first_divergence_time;
  bool ok;
};

/// Wall-aware engine vs confined free flow, compared in Wasserstein distance
/// at `samples` times spanning past the later equilibrium.
template <class T>
EquivalenceReport<T> confinement_equivalence(const DiscreteMeasure<T>& initial,
                                             const Domain<T>& domain,
                                             std::size_t samples, double tolerance);

template <class T>
struct OleinikReport {
  std::optional<double> max_quotient;  // empty for a single cluster
  double quotient_bound;               // 1/t
  bool quotient_ok;
  bool sided_ok;    // per-component (y - a)/t and (y - b)/t velocity fences
  bool uniform_ok;  // |v| <= width/t on bounded components
  double worst_margin;  // min over all checks of bound - value
};

/// One-sided Lipschitz (Oleinik) quotient and wall velocity fences at t > 0.
template <class T>
OleinikReport<T> oleinik_check(const EventLog<T>& log, const T& t, double tolerance);

/// Residual of the self-consistency identity of the free flow map:
/// integral of X(t) X(s) d rho0 minus integral of X(t) (y + s v0(y)) d rho0,
/// for 0 <= s <= t. Zero for exact sticky dynamics on the line.
template <class T>
T flow_identity_residual(const EventLog<T>& log, const T& s, const T& t);

}  // namespace spslab
