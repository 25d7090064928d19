#include "spslab/bombardment.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "spslab/asymptotics.hpp"
#include "spslab/domain.hpp"
#include "spslab/measure.hpp"
#include "spslab/particle_engine.hpp"

namespace spslab {

namespace {

template <class T>
T pow_int(T base, std::size_t n) {
  T out(1);
  while (n > 0) {
    if (n & 1) out *= base;
    base *= base;
    n >>= 1;
  }
  return out;
}

template <class T>
void require_ratio(const T& value, const char* name, std::ostringstream& err) {
  if (!(value > T(0)) || !(value < T(1))) err << name << " must lie in (0, 1); ";
}

}  // namespace

template <class T>
GeometricBombardment<T> GeometricBombardment<T>::reference() {
  const T half = from_fraction<T>(1, 2);
  return {half, half, half, half, half};
}

template <class T>
GeometricBombardment<T> GeometricBombardment<T>::speed_base(std::int64_t n) {
  if (n < 2) throw std::invalid_argument("speed base must be at least 2");
  const T half = from_fraction<T>(1, 2);
  const T inv = from_fraction<T>(1, n);
  return {half, half, half, inv, inv};
}

template <class T>
T GeometricBombardment<T>::position(std::size_t k) const {
  return T(1) - (T(1) - x0) * pow_int(rx, k);
}

template <class T>
T GeometricBombardment<T>::mass(std::size_t k) const {
  return base_mass() * pow_int(rm, k);
}

template <class T>
T GeometricBombardment<T>::cumulative_mass(std::size_t k) const {
  return T(1) - pow_int(rm, k + 1);
}

template <class T>
T GeometricBombardment<T>::speed(std::size_t k) const {
  if (k == 0) throw std::invalid_argument("incoming speeds start at index 1");
  return b1 * pow_int(rb, k - 1);
}

template <class T>
T GeometricBombardment<T>::admissible_speed() const {
  return b1 * rm / (T(1) - rm * rb);
}

template <class T>
T GeometricBombardment<T>::limit_point() const {
  return T(1) - base_mass() * (T(1) - x0) / (T(1) - rm * rx);
}

template <class T>
void ExplicitBombardment<T>::validate() const {
  std::ostringstream err;
  if (positions.size() < 2) err << "need at least two positions; ";
  if (masses.size() != positions.size()) err << "positions and masses must have equal length; ";
  if (speeds.size() + 1 != positions.size())
    err << "speeds must have one entry fewer than positions; ";
  for (std::size_t k = 0; k + 1 < positions.size(); ++k)
    if (!(positions[k] < positions[k + 1])) {
      err << "positions must be strictly increasing; ";
      break;
    }
  for (const T& m : masses)
    if (!(m > T(0))) {
      err << "masses must be positive; ";
      break;
    }
  for (std::size_t k = 0; k < speeds.size(); ++k) {
    if (!(speeds[k] > T(0))) {
      err << "incoming speeds must be positive; ";
      break;
    }
    if (k > 0 && speeds[k] > speeds[k - 1]) {
      err << "incoming speeds must be nonincreasing; ";
      break;
    }
  }
  if (tail_mass < T(0)) err << "tail mass must be nonnegative; ";
  if (tail_momentum < T(0)) err << "tail momentum must be nonnegative; ";
  const std::string msg = err.str();
  if (!msg.empty()) throw std::invalid_argument("invalid bombardment data: " + msg);
}

template <class T>
T ExplicitBombardment<T>::admissible_speed() const {
  T momentum = tail_momentum;
  for (std::size_t k = 1; k < masses.size(); ++k) momentum += masses[k] * speeds[k - 1];
  return momentum / masses[0];
}

template <class T>
T ExplicitBombardment<T>::limit_point() const {
  T sum(0);
  for (std::size_t k = 0; k < masses.size(); ++k) sum += masses[k] * positions[k];
  return sum + tail_mass * (positions.back() + T(1)) / T(2);
}

template <class T>
T ExplicitBombardment<T>::limit_point_error() const {
  return tail_mass * (T(1) - positions.back()) / T(2);
}

namespace {

/// Collision cascade shared by both input forms. The caller supplies the
/// truncated lists plus a gap-tail functional evaluating (or bounding) the
/// contribution of the targets beyond the truncation to the energy gap at
/// time t.
template <class T, class TailFn>
BombardmentRun<T> cascade(const std::vector<T>& xs, const std::vector<T>& ms,
                          const std::vector<T>& bs, T seed_speed, T ybar, T ybar_err,
                          TailFn&& tail_at) {
  const std::size_t count = bs.size();
  BombardmentRun<T> run;
  run.initial_speed = seed_speed;
  run.limit_point = ybar;
  run.limit_point_error = ybar_err;
  run.times.reserve(count + 1);
  run.points.reserve(count + 1);
  run.speeds.reserve(count + 1);
  run.times.push_back(T(0));
  run.points.push_back(xs[0]);
  run.speeds.push_back(seed_speed);

  T big_mass = ms[0];
  T absorbed_momentum(0);
  double worst = 0.0;
  for (std::size_t k = 1; k <= count; ++k) {
    const T& v_prev = run.speeds[k - 1];
    const T& t_prev = run.times[k - 1];
    const T& y_prev = run.points[k - 1];
    const T closing = v_prev + bs[k - 1];
    if (!(closing > T(0)))
      throw std::domain_error("collision cascade stalls at index " + std::to_string(k));
    const T t_k = (xs[k] - y_prev + t_prev * v_prev) / closing;
    const T y_k = xs[k] - t_k * bs[k - 1];
    const T v_k = (big_mass * v_prev - ms[k] * bs[k - 1]) / (big_mass + ms[k]);
    if (!(v_k > T(0)))
      throw std::domain_error("cluster speed drops to zero at index " + std::to_string(k));
    if (ArithmeticTraits<T>::is_exact && !(t_k > t_prev))
      throw std::logic_error("collision times failed to increase");
    big_mass += ms[k];
    absorbed_momentum += ms[k] * bs[k - 1];
    const double gap =
        to_double(abs_value(big_mass * v_k - (seed_speed * ms[0] - absorbed_momentum)));
    if (gap > worst) worst = gap;
    run.times.push_back(t_k);
    run.points.push_back(y_k);
    run.speeds.push_back(v_k);
  }
  run.momentum_residual = worst;

  run.gaps.reserve(count + 1);
  run.gap_tails.reserve(count + 1);
  T mass_so_far(0);
  for (std::size_t k = 0; k <= count; ++k) {
    mass_so_far += ms[k];
    T gap = mass_so_far * (ybar - run.points[k]) * (ybar - run.points[k]);
    for (std::size_t j = k + 1; j <= count; ++j) {
      const T d = ybar - xs[j] + run.times[k] * bs[j - 1];
      gap += ms[j] * d * d;
    }
    const T tail = tail_at(run.times[k]);
    run.gaps.push_back(gap + tail);
    run.gap_tails.push_back(tail);
  }
  return run;
}

}  // namespace

template <class T>
BombardmentRun<T> run_recursion(const GeometricBombardment<T>& family, std::size_t count) {
  {
    std::ostringstream err;
    require_ratio(family.x0, "x0", err);
    require_ratio(family.rx, "rx", err);
    require_ratio(family.rm, "rm", err);
    require_ratio(family.rb, "rb", err);
    if (!(family.b1 > T(0))) err << "b1 must be positive; ";
    const std::string msg = err.str();
    if (!msg.empty()) throw std::invalid_argument("invalid bombardment family: " + msg);
  }
  if (count == 0) throw std::invalid_argument("need at least one collision");

  std::vector<T> xs, ms, bs;
  xs.reserve(count + 1);
  ms.reserve(count + 1);
  bs.reserve(count);
  for (std::size_t k = 0; k <= count; ++k) {
    xs.push_back(family.position(k));
    ms.push_back(family.mass(k));
    if (k >= 1) bs.push_back(family.speed(k));
  }

  const T ybar = family.limit_point();
  const T cx = T(1) - family.x0;
  const T m0 = family.base_mass();
  const T a_coef = ybar - T(1);
  // Beyond the truncation the gap terms are m_j (A + B rx^j + C rb^j)^2 with
  // geometric m_j, so the tail splits into six geometric series.
  auto tail_at = [&](const T& t) {
    const T c_coef = t * family.b1 / family.rb;
    auto series = [&](T q) { return pow_int(q, count + 1) / (T(1) - q); };
    return m0 * (a_coef * a_coef * series(family.rm) +
                 cx * cx * series(family.rm * family.rx * family.rx) +
                 c_coef * c_coef * series(family.rm * family.rb * family.rb) +
                 T(2) * a_coef * cx * series(family.rm * family.rx) +
                 T(2) * a_coef * c_coef * series(family.rm * family.rb) +
                 T(2) * cx * c_coef * series(family.rm * family.rx * family.rb));
  };
  return cascade(xs, ms, bs, family.admissible_speed(), ybar, T(0), tail_at);
}

template <class T>
BombardmentRun<T> run_recursion(const ExplicitBombardment<T>& spec) {
  spec.validate();
  const T ybar = spec.limit_point();
  // Unlisted targets sit in [x_K, 1] with speeds in (0, b_K]; the offset is
  // affine in both, so corner values bound each squared term.
  auto tail_at = [&](const T& t) {
    const T lo_x = ybar - T(1);
    const T hi_x = ybar - spec.positions.back();
    const T drift = t * spec.speeds.back();
    T worst(0);
    for (const T& base : {lo_x, hi_x}) {
      for (const T& d : {T(0), drift}) {
        const T v = (base + d) * (base + d);
        if (v > worst) worst = v;
      }
    }
    return spec.tail_mass * worst;
  };
  return cascade(spec.positions, spec.masses, spec.speeds, spec.admissible_speed(), ybar,
                 spec.limit_point_error(), tail_at);
}

template <class T>
CrossValidation cross_validate_with_engine(const GeometricBombardment<T>& family,
                                           std::size_t count, double tolerance) {
  const BombardmentRun<T> run = run_recursion(family, count);

  std::vector<Atom<T>> atoms;
  atoms.reserve(count + 1);
  atoms.push_back({family.mass(0), family.position(0), run.initial_speed});
  for (std::size_t k = 1; k <= count; ++k)
    atoms.push_back({family.mass(k), family.position(k), -family.speed(k)});

  const auto log = simulate<T>(atoms, Domain<T>::real_line(), run.times.back() + T(1));

  CrossValidation out{std::nullopt, 0.0, 0.0, 0.0, true};
  const auto& events = log.events();
  if (events.size() != count) {
    out.first_mismatch = events.size() < count ? events.size() : count;
    out.ok = false;
    return out;
  }
  for (std::size_t k = 0; k < count; ++k) {
    const auto& ev = events[k];
    const double dt = to_double(abs_value(ev.time - run.times[k + 1]));
    const double dy = to_double(abs_value(ev.position - run.points[k + 1]));
    const double dv = to_double(abs_value(ev.resulting.velocity - run.speeds[k + 1]));
    if (dt > out.max_time_error) out.max_time_error = dt;
    if (dy > out.max_point_error) out.max_point_error = dy;
    if (dv > out.max_speed_error) out.max_speed_error = dv;
    const bool bad = ev.kind != EventKind::kInteriorMerge || dt > tolerance ||
                     dy > tolerance || dv > tolerance;
    if (bad && !out.first_mismatch) {
      out.first_mismatch = k;
      out.ok = false;
    }
  }
  return out;
}

std::vector<SweepRow> exponent_sweep(const std::vector<std::int64_t>& bases,
                                     std::size_t count, std::size_t lo, std::size_t hi) {
  if (lo >= hi || hi > count)
    throw std::invalid_argument("fit window must satisfy lo < hi <= count");
  std::vector<SweepRow> rows;
  rows.reserve(bases.size());
  for (const std::int64_t n : bases) {
    const auto run = run_recursion(GeometricBombardment<Rational>::speed_base(n), count);
    std::vector<double> times, gaps;
    times.reserve(count + 1);
    gaps.reserve(count + 1);
    for (std::size_t k = 0; k <= count; ++k) {
      times.push_back(to_double(run.times[k]));
      gaps.push_back(to_double(run.gaps[k]));
    }
    const DecayFit fit = fit_decay_exponent(times, gaps, lo, hi);
    rows.push_back({n, fit.exponent, fit.max_log_residual});
  }
  return rows;
}

#define SPSLAB_INSTANTIATE_BOMBARDMENT(T)                                                \
  template struct GeometricBombardment<T>;                                               \
  template struct ExplicitBombardment<T>;                                                \
  template BombardmentRun<T> run_recursion(const GeometricBombardment<T>&, std::size_t); \
  template BombardmentRun<T> run_recursion(const ExplicitBombardment<T>&);               \
  template CrossValidation cross_validate_with_engine(const GeometricBombardment<T>&,    \
                                                      std::size_t, double);

SPSLAB_INSTANTIATE_BOMBARDMENT(double)
SPSLAB_INSTANTIATE_BOMBARDMENT(Rational)

#undef SPSLAB_INSTANTIATE_BOMBARDMENT

}  // namespace spslab
