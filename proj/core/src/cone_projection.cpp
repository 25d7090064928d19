#include "spslab/cone_projection.hpp"

#include <random>
#include <stdexcept>

#include "spslab/tolerances.hpp"

namespace spslab {

namespace {

template <class T>
struct Block {
  T weight;
  T weighted_sum;
  std::size_t cells;
};

}  // namespace

template <class T>
StepFunction<T> pava_isotonic(const StepFunction<T>& f) {
  std::vector<Block<T>> stack;
  stack.reserve(f.cells());
  for (std::size_t i = 0; i < f.cells(); ++i) {
    const T w = f.breakpoints()[i + 1] - f.breakpoints()[i];
    stack.push_back(Block<T>{w, w * f.values()[i], 1});
    // Pool while the previous block mean >= the new one (ties pool too, which
    // keeps the block decomposition canonical). Compared via cross products to
    // avoid divisions.
    while (stack.size() >= 2) {
      const Block<T>& a = stack[stack.size() - 2];
      const Block<T>& b = stack.back();
      if (a.weighted_sum * b.weight < b.weighted_sum * a.weight) break;
      Block<T> merged{a.weight + b.weight, a.weighted_sum + b.weighted_sum,
                      a.cells + b.cells};
      stack.pop_back();
      stack.back() = std::move(merged);
    }
  }
  std::vector<T> vals;
  vals.reserve(f.cells());
  for (const auto& blk : stack) {
    const T mean = blk.weighted_sum / blk.weight;
    vals.insert(vals.end(), blk.cells, mean);
  }
  StepFunction<T> out(f.breakpoints(), std::move(vals));
  if (!out.is_nondecreasing(T(ArithmeticTraits<T>::is_exact ? 0.0 : tol::kMonotoneSlack))) {
    throw std::logic_error("pava_isotonic: output failed the monotonicity postcondition");
  }
  return out;
}

template <class T>
ConeProjectionResult<T> project_monotone(const StepFunction<T>& f) {
  StepFunction<T> proj = pava_isotonic(f);
  PiecewiseLinear<T> primitive = antiderivative(f);
  PiecewiseLinear<T> env = convex_envelope(primitive);

  const T eps(ArithmeticTraits<T>::is_exact ? 0.0 : tol::kCoincidence);
  std::vector<std::pair<T, T>> contact;
  bool open = false;
  for (std::size_t i = 0; i < primitive.knots().size(); ++i) {
    const T& x = primitive.knots()[i];
    const bool touches = abs_value(primitive.values()[i] - env(x)) <= eps;
    if (touches && !open) {
      contact.emplace_back(x, x);
      open = true;
    } else if (touches && open) {
      contact.back().second = x;
    } else {
      open = false;
    }
  }
  return ConeProjectionResult<T>{std::move(proj), std::move(env), std::move(contact)};
}

template <class T>
CertificateReport<T> cone_certificates(const StepFunction<T>& f,
                                       const StepFunction<T>& projection,
                                       std::uint64_t seed, const T& tolerance) {
  const StepFunction<T> residual = affine_combine(T(1), f, T(-1), projection);

  CertificateReport<T> report{T(0), abs_value(l2_inner(residual, projection)),
                              true, ""};
  auto probe = [&](const StepFunction<T>& candidate, const std::string& label) {
    const T pairing =
        l2_inner(residual, affine_combine(T(1), candidate, T(-1), projection));
    if (report.worst_label.empty() || report.worst_pairing < pairing) {
      report.worst_pairing = pairing;
      report.worst_label = label;
    }
  };

  probe(StepFunction<T>::constant(T(1)), "constant +1");
  probe(StepFunction<T>::constant(T(-1)), "constant -1");
  probe(projection, "projection itself");
  // Nonpositive tail indicators -1_{(0, b_k]} for every interior breakpoint;
  // these span the extreme rays the projection must not lean on.
  for (std::size_t k = 1; k < f.breakpoints().size(); ++k) {
    std::vector<T> vals(f.cells(), T(0));
    for (std::size_t i = 0; i < k && i < f.cells(); ++i) vals[i] = T(-1);
    probe(StepFunction<T>(f.breakpoints(), std::move(vals)),
          "tail indicator " + std::to_string(k));
  }
  std::mt19937_64 rng(seed);
  for (int r = 0; r < 32; ++r) {
    const std::size_t cells = 1 + rng() % 8;
    std::vector<std::int64_t> raw(cells);
    for (auto& v : raw) v = static_cast<std::int64_t>(rng() % 257) - 128;
    std::sort(raw.begin(), raw.end());
    std::vector<T> bp, vals;
    bp.push_back(T(0));
    for (std::size_t i = 1; i < cells; ++i) {
      bp.push_back(from_fraction<T>(static_cast<std::int64_t>(i), static_cast<std::int64_t>(cells)));
    }
    bp.push_back(T(1));
    for (std::size_t i = 0; i < cells; ++i) vals.push_back(from_fraction<T>(raw[i], 64));
    probe(StepFunction<T>(std::move(bp), std::move(vals)), "random monotone " + std::to_string(r));
  }

  report.ok = report.worst_pairing <= tolerance && report.orthogonality <= tolerance;
  return report;
}

template <class T>
ConfinementCheck<T> is_confinement_consistent(const StepFunction<T>& velocity_profile) {
  const T eps(ArithmeticTraits<T>::is_exact ? 0.0 : tol::kCoincidence);
  PiecewiseLinear<T> primitive = antiderivative(velocity_profile);
  auto [argmin, min_value] = primitive.minimum();
  const T end = primitive.back_value();
  const bool primitive_ok = abs_value(end) <= eps && min_value >= -eps;

  const StepFunction<T> proj = pava_isotonic(velocity_profile);
  const bool projection_zero = l2_norm_sq(proj) <= eps * eps;

  ConfinementCheck<T> check{primitive_ok, projection_zero == primitive_ok, end, min_value,
                            std::nullopt};
  if (!primitive_ok) check.witness = argmin;
  return check;
}

#define SPSLAB_INSTANTIATE(T)                                                          \
  template StepFunction<T> pava_isotonic(const StepFunction<T>&);                      \
  template ConeProjectionResult<T> project_monotone(const StepFunction<T>&);           \
  template CertificateReport<T> cone_certificates(const StepFunction<T>&,              \
                                                  const StepFunction<T>&,              \
                                                  std::uint64_t, const T&);            \
  template ConfinementCheck<T> is_confinement_consistent(const StepFunction<T>&);

SPSLAB_INSTANTIATE(double)
SPSLAB_INSTANTIATE(Rational)
#undef SPSLAB_INSTANTIATE

}  // namespace spslab
