#include "spslab/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "spslab/asymptotics.hpp"
#include "spslab/cone_projection.hpp"
#include "spslab/lagrangian_solver.hpp"
#include "spslab/particle_engine.hpp"
#include "spslab/step_function.hpp"
#include "spslab/tolerances.hpp"

namespace spslab {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr CheckKind kCheckOrder[] = {
    CheckKind::kDualOracle,        CheckKind::kIdentities,
    CheckKind::kShapes,            CheckKind::kOleinik,
    CheckKind::kConfinementEquivalence, CheckKind::kFlowIdentity,
};

}  // namespace

std::string to_string(ArithmeticMode mode) {
  return mode == ArithmeticMode::kFloat64 ? "float64" : "rational";
}

std::string to_string(CheckKind kind) {
  switch (kind) {
    case CheckKind::kDualOracle: return "dual_oracle";
    case CheckKind::kIdentities: return "identities";
    case CheckKind::kShapes: return "shapes";
    case CheckKind::kOleinik: return "oleinik";
    case CheckKind::kConfinementEquivalence: return "confinement_equivalence";
    case CheckKind::kFlowIdentity: return "flow_identity";
  }
  return "unknown";
}

std::optional<ArithmeticMode> arithmetic_from_string(const std::string& s) {
  if (s == "float64") return ArithmeticMode::kFloat64;
  if (s == "rational") return ArithmeticMode::kRational;
  return std::nullopt;
}

std::optional<CheckKind> check_from_string(const std::string& s) {
  for (const CheckKind kind : kCheckOrder)
    if (to_string(kind) == s) return kind;
  return std::nullopt;
}

std::string rational_to_string(const Rational& r) {
  const auto num = boost::multiprecision::numerator(r);
  const auto den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

std::optional<Rational> rational_from_string(const std::string& s) {
  const auto is_digits = [](const std::string& t) {
    return !t.empty() && std::all_of(t.begin(), t.end(),
                                     [](unsigned char c) { return std::isdigit(c); });
  };
  std::string num = s, den = "1";
  if (const auto slash = s.find('/'); slash != std::string::npos) {
    num = s.substr(0, slash);
    den = s.substr(slash + 1);
  }
  std::string digits = num;
  if (!digits.empty() && (digits[0] == '+' || digits[0] == '-')) digits.erase(0, 1);
  if (!is_digits(digits) || !is_digits(den)) return std::nullopt;
  const boost::multiprecision::cpp_int d(den);
  if (d == 0) return std::nullopt;
  return Rational(boost::multiprecision::cpp_int(num), d);
}

std::string format_float(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

// nlohmann's serializer emits shortest-round-trip floats; artifacts promise a
// fixed 17-significant-digit form instead, hence this dumper.
void dump_deterministic(const ordered_json& v, std::string& out, int depth) {
  const auto indent = [&](int d) { out.append(static_cast<std::size_t>(2 * d), ' '); };
  switch (v.type()) {
    case json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : v.items()) {
        if (!first) out += ",\n";
        first = false;
        indent(depth + 1);
        out += ordered_json(key).dump();
        out += ": ";
        dump_deterministic(value, out, depth + 1);
      }
      out += "\n";
      indent(depth);
      out += "}";
      return;
    }
    case json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      const bool flat = std::all_of(v.begin(), v.end(), [](const ordered_json& e) {
        return e.is_primitive();
      });
      if (flat) {
        out += "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (i) out += ", ";
          dump_deterministic(v[i], out, depth);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",\n";
        indent(depth + 1);
        dump_deterministic(v[i], out, depth + 1);
      }
      out += "\n";
      indent(depth);
      out += "]";
      return;
    }
    case json::value_t::string:
      out += ordered_json(v.get<std::string>()).dump();
      return;
    case json::value_t::number_float: {
      const double x = v.get<double>();
      out += std::isfinite(x) ? format_float(x) : "null";
      return;
    }
    case json::value_t::number_integer:
      out += std::to_string(v.get<std::int64_t>());
      return;
    case json::value_t::number_unsigned:
      out += std::to_string(v.get<std::uint64_t>());
      return;
    case json::value_t::boolean:
      out += v.get<bool>() ? "true" : "false";
      return;
    default:
      out += "null";
      return;
  }
}

std::string dump_document(const ordered_json& doc) {
  std::string out;
  dump_deterministic(doc, out, 0);
  out += "\n";
  return out;
}

struct ErrorList {
  std::vector<std::string> errors;
  void add(const std::string& msg) { errors.push_back(msg); }
  void raise_if_any(const std::string& context) const {
    if (errors.empty()) return;
    std::string msg = context + ":";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ScenarioError(msg);
  }
};

std::optional<Rational> scalar_from_json(const json& j, bool rational_mode,
                                         std::string& why) {
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_number_unsigned()) return Rational(j.get<std::uint64_t>());
  if (j.is_number_float()) {
    if (rational_mode) {
      why = "rational mode needs integers or \"p/q\" strings";
      return std::nullopt;
    }
    const double d = j.get<double>();
    if (!std::isfinite(d)) {
      why = "must be finite";
      return std::nullopt;
    }
    return Rational(d);
  }
  if (j.is_string()) {
    auto r = rational_from_string(j.get<std::string>());
    if (!r) why = "malformed fraction string \"" + j.get<std::string>() + "\"";
    return r;
  }
  why = "must be a number or a \"p/q\" string";
  return std::nullopt;
}

void check_known_keys(const json& obj, std::initializer_list<const char*> known,
                      const std::string& where, ErrorList& errs) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find_if(known.begin(), known.end(),
                     [&](const char* k) { return key == k; }) == known.end())
      errs.add(where + ": unknown field \"" + key + "\"");
  }
}

std::optional<DomainComponent<Rational>> parse_domain_component(
    const json& j, bool rational_mode, const std::string& where, ErrorList& errs) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    errs.add(where + ": expected an object with a \"kind\" string");
    return std::nullopt;
  }
  const std::string kind = j.at("kind").get<std::string>();
  const auto endpoint = [&](const char* key) -> std::optional<Rational> {
    if (!j.contains(key)) {
      errs.add(where + ": kind \"" + kind + "\" needs endpoint \"" + key + "\"");
      return std::nullopt;
    }
    std::string why;
    auto r = scalar_from_json(j.at(key), rational_mode, why);
    if (!r) errs.add(where + "." + key + ": " + why);
    return r;
  };
  if (kind == "interval") {
    check_known_keys(j, {"kind", "a", "b"}, where, errs);
    auto a = endpoint("a"), b = endpoint("b");
    if (!a || !b) return std::nullopt;
    if (!(*a < *b)) {
      errs.add(where + ": interval needs a < b");
      return std::nullopt;
    }
    return DomainComponent<Rational>{*a, *b};
  }
  if (kind == "left_ray") {
    check_known_keys(j, {"kind", "b"}, where, errs);
    auto b = endpoint("b");
    if (!b) return std::nullopt;
    return DomainComponent<Rational>{std::nullopt, *b};
  }
  if (kind == "right_ray") {
    check_known_keys(j, {"kind", "a"}, where, errs);
    auto a = endpoint("a");
    if (!a) return std::nullopt;
    return DomainComponent<Rational>{*a, std::nullopt};
  }
  errs.add(where + ": unknown kind \"" + kind + "\"");
  return std::nullopt;
}

Domain<Rational> parse_domain(const json& j, bool rational_mode, ErrorList& errs) {
  const auto fallback = Domain<Rational>::real_line();
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    errs.add("domain: expected an object with a \"kind\" string");
    return fallback;
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "line") {
    check_known_keys(j, {"kind"}, "domain", errs);
    return fallback;
  }
  if (kind == "union") {
    check_known_keys(j, {"kind", "components"}, "domain", errs);
    if (!j.contains("components") || !j.at("components").is_array() ||
        j.at("components").empty()) {
      errs.add("domain: union needs a nonempty \"components\" array");
      return fallback;
    }
    std::vector<DomainComponent<Rational>> comps;
    bool ok = true;
    for (std::size_t i = 0; i < j.at("components").size(); ++i) {
      auto c = parse_domain_component(j.at("components")[i], rational_mode,
                                      "domain.components[" + std::to_string(i) + "]", errs);
      if (c)
        comps.push_back(*c);
      else
        ok = false;
    }
    if (!ok) return fallback;
    try {
      return Domain<Rational>::union_of(std::move(comps));
    } catch (const std::invalid_argument& e) {
      errs.add(std::string("domain: ") + e.what());
      return fallback;
    }
  }
  auto c = parse_domain_component(j, rational_mode, "domain", errs);
  if (!c) return fallback;
  try {
    return Domain<Rational>::union_of({*c});
  } catch (const std::invalid_argument& e) {
    errs.add(std::string("domain: ") + e.what());
    return fallback;
  }
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& context) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(context + ": " + e.what());
  }
  ErrorList errs;
  if (!doc.is_object()) {
    errs.add("top level must be an object");
    errs.raise_if_any(context);
  }
  check_known_keys(doc,
                   {"name", "arithmetic", "atoms", "domain", "horizon", "times",
                    "checks", "seed"},
                   "scenario", errs);

  Scenario out;
  if (!doc.contains("name") || !doc.at("name").is_string() ||
      doc.at("name").get<std::string>().empty())
    errs.add("\"name\" must be a nonempty string");
  else {
    out.name = doc.at("name").get<std::string>();
    if (out.name.find_first_of(",\n\r") != std::string::npos)
      errs.add("\"name\" must not contain commas or line breaks");
  }

  if (doc.contains("arithmetic")) {
    if (!doc.at("arithmetic").is_string())
      errs.add("\"arithmetic\" must be \"float64\" or \"rational\"");
    else if (auto mode = arithmetic_from_string(doc.at("arithmetic").get<std::string>()))
      out.arithmetic = *mode;
    else
      errs.add("\"arithmetic\" must be \"float64\" or \"rational\", got \"" +
               doc.at("arithmetic").get<std::string>() + "\"");
  }
  const bool rational_mode = out.arithmetic == ArithmeticMode::kRational;

  if (!doc.contains("atoms") || !doc.at("atoms").is_array() || doc.at("atoms").empty())
    errs.add("\"atoms\" must be a nonempty array");
  else {
    const auto& atoms = doc.at("atoms");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const std::string where = "atoms[" + std::to_string(i) + "]";
      if (!atoms[i].is_object()) {
        errs.add(where + ": expected an object with fields m, x, v");
        continue;
      }
      check_known_keys(atoms[i], {"m", "x", "v"}, where, errs);
      Atom<Rational> atom{Rational(0), Rational(0), Rational(0)};
      bool ok = true;
      for (const auto& [key, target] :
           {std::pair<const char*, Rational*>{"m", &atom.mass},
            {"x", &atom.position},
            {"v", &atom.velocity}}) {
        if (!atoms[i].contains(key)) {
          errs.add(where + ": missing field \"" + std::string(key) + "\"");
          ok = false;
          continue;
        }
        std::string why;
        auto r = scalar_from_json(atoms[i].at(key), rational_mode, why);
        if (!r) {
          errs.add(where + "." + key + ": " + why);
          ok = false;
        } else
          *target = *r;
      }
      if (ok && !(atom.mass > 0))
        errs.add(where + ".m: mass must be positive");
      else if (ok)
        out.atoms.push_back(std::move(atom));
    }
    if (!out.atoms.empty() && out.atoms.size() == atoms.size()) {
      Rational total(0);
      for (const auto& a : out.atoms) total += a.mass;
      if (rational_mode ? (total != 1)
                        : (std::abs(to_double(total) - 1.0) > tol::kUnit))
        errs.add("masses must sum to 1, got " + rational_to_string(total));
    }
  }

  if (doc.contains("domain"))
    out.domain = parse_domain(doc.at("domain"), rational_mode, errs);

  for (std::size_t i = 0; i < out.atoms.size(); ++i)
    if (!out.domain.contains(out.atoms[i].position))
      errs.add("atoms[" + std::to_string(i) + "].x = " +
               rational_to_string(out.atoms[i].position) + " lies outside the domain");

  if (doc.contains("horizon")) {
    std::string why;
    auto h = scalar_from_json(doc.at("horizon"), rational_mode, why);
    if (!h)
      errs.add("horizon: " + why);
    else if (!(*h > 0))
      errs.add("horizon must be positive");
    else
      out.horizon = *h;
  }

  if (doc.contains("times")) {
    if (!doc.at("times").is_array())
      errs.add("\"times\" must be an array");
    else {
      for (std::size_t i = 0; i < doc.at("times").size(); ++i) {
        std::string why;
        auto t = scalar_from_json(doc.at("times")[i], rational_mode, why);
        const std::string where = "times[" + std::to_string(i) + "]";
        if (!t)
          errs.add(where + ": " + why);
        else if (*t < 0)
          errs.add(where + ": must be nonnegative");
        else if (out.horizon && *t > *out.horizon)
          errs.add(where + ": exceeds the horizon");
        else
          out.times.push_back(*t);
      }
      std::sort(out.times.begin(), out.times.end());
      out.times.erase(std::unique(out.times.begin(), out.times.end()), out.times.end());
    }
  }

  if (doc.contains("checks")) {
    if (!doc.at("checks").is_array())
      errs.add("\"checks\" must be an array of check names");
    else {
      std::vector<CheckKind> requested;
      for (const auto& entry : doc.at("checks")) {
        if (!entry.is_string()) {
          errs.add("checks: entries must be strings");
          continue;
        }
        auto kind = check_from_string(entry.get<std::string>());
        if (!kind) {
          errs.add("checks: unknown check \"" + entry.get<std::string>() +
                   "\" (valid: dual_oracle, identities, shapes, oleinik, "
                   "confinement_equivalence, flow_identity)");
          continue;
        }
        requested.push_back(*kind);
      }
      for (const CheckKind kind : kCheckOrder)
        if (std::find(requested.begin(), requested.end(), kind) != requested.end())
          out.checks.push_back(kind);
    }
  }

  const bool line = out.domain.is_real_line();
  for (const CheckKind kind : out.checks) {
    if (!line && (kind == CheckKind::kDualOracle || kind == CheckKind::kFlowIdentity))
      errs.add("check \"" + to_string(kind) + "\" is defined on the full line only");
    if (line && kind == CheckKind::kConfinementEquivalence)
      errs.add("check \"confinement_equivalence\" needs a domain with walls");
  }

  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned() && !doc.at("seed").is_number_integer())
      errs.add("\"seed\" must be a nonnegative integer");
    else if (doc.at("seed").is_number_integer() && doc.at("seed").get<std::int64_t>() < 0)
      errs.add("\"seed\" must be a nonnegative integer");
    else
      out.seed = doc.at("seed").get<std::uint64_t>();
  }

  errs.raise_if_any(context);
  return out;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

namespace {

template <class T>
T cast_scalar(const Rational& r);
template <>
double cast_scalar<double>(const Rational& r) {
  return to_double(r);
}
template <>
Rational cast_scalar<Rational>(const Rational& r) {
  return r;
}

template <class T>
Domain<T> cast_domain(const Domain<Rational>& d) {
  if (d.is_real_line()) return Domain<T>::real_line();
  std::vector<DomainComponent<T>> comps;
  for (const auto& c : d.components()) {
    DomainComponent<T> out;
    if (c.lower) out.lower = cast_scalar<T>(*c.lower);
    if (c.upper) out.upper = cast_scalar<T>(*c.upper);
    comps.push_back(std::move(out));
  }
  return Domain<T>::union_of(std::move(comps));
}

ordered_json value_json(double x) { return x; }
ordered_json value_json(const Rational& r) { return rational_to_string(r); }

ordered_json scalar_echo(const Rational& r, ArithmeticMode mode) {
  if (mode == ArithmeticMode::kRational) return rational_to_string(r);
  return to_double(r);
}

ordered_json component_echo(const DomainComponent<Rational>& c, ArithmeticMode mode) {
  ordered_json out;
  if (c.bounded()) {
    out["kind"] = "interval";
    out["a"] = scalar_echo(*c.lower, mode);
    out["b"] = scalar_echo(*c.upper, mode);
  } else if (c.upper) {
    out["kind"] = "left_ray";
    out["b"] = scalar_echo(*c.upper, mode);
  } else {
    out["kind"] = "right_ray";
    out["a"] = scalar_echo(*c.lower, mode);
  }
  return out;
}

ordered_json domain_echo(const Domain<Rational>& d, ArithmeticMode mode) {
  if (d.is_real_line()) return ordered_json{{"kind", "line"}};
  if (d.component_count() == 1) return component_echo(d.components().front(), mode);
  ordered_json out;
  out["kind"] = "union";
  out["components"] = ordered_json::array();
  for (const auto& c : d.components()) out["components"].push_back(component_echo(c, mode));
  return out;
}

double default_tolerance(CheckKind kind) {
  switch (kind) {
    case CheckKind::kDualOracle: return tol::kDualOracle;
    case CheckKind::kIdentities: return tol::kIdentity;
    case CheckKind::kShapes: return tol::kShape;
    case CheckKind::kOleinik: return tol::kShape;
    case CheckKind::kConfinementEquivalence: return tol::kEquivalence;
    case CheckKind::kFlowIdentity: return tol::kIdentity;
  }
  return tol::kIdentity;
}

template <class T>
std::vector<T> query_times(const Scenario& scenario, const EventLog<T>& log) {
  if (!scenario.times.empty()) {
    std::vector<T> out;
    out.reserve(scenario.times.size());
    for (const auto& t : scenario.times) out.push_back(cast_scalar<T>(t));
    return out;
  }
  std::vector<double> ts{0.0};
  double t_ref = 1.0;
  if (log.complete()) {
    const double te = to_double(*log.equilibrium_time());
    if (te > 0) t_ref = te;
  } else {
    t_ref = to_double(*log.horizon());
  }
  for (const auto& ev : log.events()) {
    const double te = to_double(ev.time);
    const double eps = 1e-6 * std::max(1.0, te);
    if (te > eps) ts.push_back(te - eps);
    ts.push_back(te);
    ts.push_back(te + eps);
  }
  for (int k = 0; k < 16; ++k)
    ts.push_back(t_ref / 256.0 * std::pow(384.0, k / 15.0));
  if (!log.complete()) {
    const double cap = to_double(*log.horizon());
    ts.erase(std::remove_if(ts.begin(), ts.end(), [&](double t) { return t > cap; }),
             ts.end());
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::vector<T> out;
  out.reserve(ts.size());
  for (const double t : ts) out.push_back(from_double<T>(t));
  return out;
}

template <class T>
std::string series_csv(const EventLog<T>& log, const LimitResult<T>& lim,
                       const std::vector<T>& times) {
  std::string csv = "t,e,theta,metric_derivative,energy,n_clusters\n";
  for (const T& t : times) {
    const double energy = to_double(metric_derivative_sq(log, t));
    double gap = std::numeric_limits<double>::quiet_NaN();
    if (!lim.diverges && lim.profile) gap = to_double(energy_gap(log, *lim.profile, t));
    csv += format_float(to_double(t));
    csv += ",";
    csv += format_float(gap);
    csv += ",";
    csv += format_float(to_double(theta(log, t)));
    csv += ",";
    csv += format_float(std::sqrt(std::max(0.0, energy)));
    csv += ",";
    csv += format_float(energy);
    csv += ",";
    csv += std::to_string(log.clusters_at(t).size());
    csv += "\n";
  }
  return csv;
}

struct CheckPayload {
  CheckOutcome outcome;
  ordered_json data;
};

template <class T>
CheckPayload check_dual_oracle(const Scenario& scenario, const EventLog<T>& log,
                               const DiscreteMeasure<T>& measure,
                               const std::vector<T>& times, double tolerance) {
  const auto sol = LagrangianSolution<T>::from_measure(measure);
  double max_l2 = 0.0;
  for (const T& t : times) {
    const double d = l2_distance(log.quantile_at(t), solve_quantile(sol, t));
    if (d > max_l2) max_l2 = d;
  }
  T probe_time(1);
  for (const T& t : times)
    if (t > 0) probe_time = t;
  const auto lifted = affine_combine(T(1), sol.initial_quantile, probe_time,
                                     sol.initial_velocity);
  const auto cert = cone_certificates(lifted, pava_isotonic(lifted), scenario.seed,
                                      from_double<T>(tol::kCertificate));
  const double pairing = std::max(0.0, to_double(cert.worst_pairing));
  const double ortho = to_double(cert.orthogonality);
  const double worst = std::max({max_l2, pairing, ortho});

  CheckPayload out;
  out.outcome = {to_string(CheckKind::kDualOracle),
                 worst <= tolerance ? "pass" : "fail",
                 worst,
                 tolerance,
                 worst == max_l2 ? "engine vs projection L2" : cert.worst_label,
                 worst <= tolerance};
  out.data["times"] = times.size();
  out.data["max_l2"] = max_l2;
  out.data["certificate"] = ordered_json{{"worst_pairing", to_double(cert.worst_pairing)},
                                         {"orthogonality", ortho},
                                         {"worst_label", cert.worst_label},
                                         {"seed", scenario.seed}};
  return out;
}

template <class T>
CheckPayload check_identities(const EventLog<T>& log, const LimitResult<T>& lim,
                              double tolerance) {
  CheckPayload out;
  out.outcome.name = to_string(CheckKind::kIdentities);
  out.outcome.tolerance = tolerance;
  out.outcome.worst = 0.0;
  out.outcome.passed = true;
  if (!log.complete()) {
    out.outcome.status = "not_applicable";
    out.outcome.detail = "log truncated by horizon";
    return out;
  }
  if (!identities_applicable(log)) {
    out.outcome.status = "not_applicable";
    out.outcome.detail = "walls absorbed momentum";
    return out;
  }
  if (lim.diverges || !lim.profile) {
    out.outcome.status = "divergent";
    out.outcome.detail = "no stationary limit";
    return out;
  }
  const auto residuals = identity_residuals(log, *lim.profile);
  double worst = 0.0;
  std::string worst_key;
  ordered_json table;
  for (const auto& [key, value] : residuals) {
    table[key] = value;
    if (value > worst) {
      worst = value;
      worst_key = key;
    }
  }
  const auto probe = normalization_probe(log, tolerance);
  out.outcome.status = worst <= tolerance ? "pass" : "fail";
  out.outcome.worst = worst;
  out.outcome.detail = worst_key;
  out.outcome.passed = worst <= tolerance;
  out.data["residuals"] = std::move(table);
  out.data["normalization"] =
      ordered_json{{"residual_printed", probe.residual_printed},
                   {"residual_derived", probe.residual_derived},
                   {"printed_holds", probe.printed_holds},
                   {"derived_holds", probe.derived_holds}};
  return out;
}

template <class T>
CheckPayload check_shapes(const EventLog<T>& log, const LimitResult<T>& lim,
                          double tolerance) {
  CheckPayload out;
  out.outcome.name = to_string(CheckKind::kShapes);
  out.outcome.tolerance = tolerance;
  out.outcome.worst = 0.0;
  out.outcome.passed = true;
  if (!log.complete()) {
    out.outcome.status = "not_applicable";
    out.outcome.detail = "log truncated by horizon";
    return out;
  }
  if (!identities_applicable(log)) {
    out.outcome.status = "not_applicable";
    out.outcome.detail = "walls absorbed momentum";
    return out;
  }
  if (lim.diverges || !lim.profile) {
    out.outcome.status = "divergent";
    out.outcome.detail = "no stationary limit";
    return out;
  }
  const auto margins = shape_margins(log, *lim.profile);
  double min_margin = 0.0;
  std::string worst_key;
  ordered_json table;
  for (const auto& [key, value] : margins) {
    table[key] = value;
    if (value < min_margin || worst_key.empty()) {
      min_margin = std::min(min_margin, value);
      if (value <= min_margin) worst_key = key;
    }
  }
  const double worst = std::max(0.0, -min_margin);
  out.outcome.status = worst <= tolerance ? "pass" : "fail";
  out.outcome.worst = worst;
  out.outcome.detail = worst_key;
  out.outcome.passed = worst <= tolerance;
  out.data["margins"] = std::move(table);
  return out;
}

template <class T>
CheckPayload check_oleinik(const EventLog<T>& log, const std::vector<T>& times,
                           double tolerance) {
  double worst_margin = std::numeric_limits<double>::infinity();
  std::optional<double> max_quotient;
  std::size_t samples = 0;
  bool all_ok = true;
  for (const T& t : times) {
    if (!(t > 0)) continue;
    const auto report = oleinik_check(log, t, tolerance);
    ++samples;
    worst_margin = std::min(worst_margin, report.worst_margin);
    if (report.max_quotient)
      max_quotient = std::max(max_quotient.value_or(-std::numeric_limits<double>::infinity()),
                              *report.max_quotient);
    all_ok = all_ok && report.quotient_ok && report.sided_ok && report.uniform_ok;
  }
  CheckPayload out;
  const double worst =
      samples == 0 ? 0.0 : std::max(0.0, -std::min(worst_margin, 0.0));
  const bool passed = samples == 0 || (all_ok && worst <= tolerance);
  out.outcome = {to_string(CheckKind::kOleinik),
                 passed ? "pass" : "fail",
                 worst,
                 tolerance,
                 "one-sided slope and wall fences",
                 passed};
  out.data["times"] = samples;
  if (max_quotient)
    out.data["max_quotient"] = *max_quotient;
  else
    out.data["max_quotient"] = nullptr;
  out.data["worst_margin"] = samples == 0 ? 0.0 : worst_margin;
  return out;
}

template <class T>
CheckPayload check_confinement(const DiscreteMeasure<T>& measure, const Domain<T>& domain,
                               double tolerance) {
  const auto report = confinement_equivalence(measure, domain, 64, tolerance);
  CheckPayload out;
  out.outcome = {to_string(CheckKind::kConfinementEquivalence),
                 report.ok ? "pass" : "fail",
                 report.max_w2,
                 tolerance,
                 "native walls vs frozen free flow",
                 report.ok};
  out.data["samples"] = 64;
  out.data["max_w2"] = report.max_w2;
  if (report.first_divergence_time)
    out.data["first_divergence_time"] = *report.first_divergence_time;
  else
    out.data["first_divergence_time"] = nullptr;
  return out;
}

template <class T>
CheckPayload check_flow_identity(const EventLog<T>& log, double tolerance) {
  double t_max = 1.0;
  if (log.complete()) {
    t_max = std::max(1.0, to_double(*log.equilibrium_time()));
  } else {
    t_max = to_double(*log.horizon());
  }
  double worst = 0.0;
  std::size_t pairs = 0;
  for (int i = 0; i <= 5; ++i) {
    for (int j = i; j <= 5; ++j) {
      const T s = from_double<T>(t_max * i / 5.0);
      const T t = from_double<T>(t_max * j / 5.0);
      const double r = to_double(abs_value(flow_identity_residual(log, s, t)));
      if (r > worst) worst = r;
      ++pairs;
    }
  }
  CheckPayload out;
  out.outcome = {to_string(CheckKind::kFlowIdentity),
                 worst <= tolerance ? "pass" : "fail",
                 worst,
                 tolerance,
                 "flow map self-consistency",
                 worst <= tolerance};
  out.data["pairs"] = pairs;
  out.data["max_residual"] = worst;
  return out;
}

template <class T>
ResultBundle run_typed(const Scenario& scenario, std::optional<double> tolerance_override) {
  std::vector<Atom<T>> atoms;
  atoms.reserve(scenario.atoms.size());
  for (const auto& a : scenario.atoms)
    atoms.push_back({cast_scalar<T>(a.mass), cast_scalar<T>(a.position),
                     cast_scalar<T>(a.velocity)});
  const Domain<T> domain = cast_domain<T>(scenario.domain);
  std::optional<T> horizon;
  if (scenario.horizon) horizon = cast_scalar<T>(*scenario.horizon);

  EventLog<T> log = [&] {
    try {
      return simulate<T>(atoms, domain, horizon);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(scenario.name + ": " + e.what());
    }
  }();
  const DiscreteMeasure<T> measure(atoms);

  LimitResult<T> lim{true, std::nullopt};
  if (log.complete()) lim = limit_profile(log);
  const std::vector<T> times = query_times(scenario, log);

  ResultBundle bundle;
  bundle.series_csv = series_csv(log, lim, times);

  std::vector<CheckPayload> payloads;
  for (const CheckKind kind : scenario.checks) {
    const double tolerance = tolerance_override.value_or(default_tolerance(kind));
    switch (kind) {
      case CheckKind::kDualOracle:
        payloads.push_back(check_dual_oracle(scenario, log, measure, times, tolerance));
        break;
      case CheckKind::kIdentities:
        payloads.push_back(check_identities(log, lim, tolerance));
        break;
      case CheckKind::kShapes:
        payloads.push_back(check_shapes(log, lim, tolerance));
        break;
      case CheckKind::kOleinik:
        payloads.push_back(check_oleinik(log, times, tolerance));
        break;
      case CheckKind::kConfinementEquivalence:
        payloads.push_back(check_confinement(measure, domain, tolerance));
        break;
      case CheckKind::kFlowIdentity:
        payloads.push_back(check_flow_identity(log, tolerance));
        break;
    }
  }

  ordered_json doc;
  doc["schema"] = "spslab-result-v1";
  doc["name"] = scenario.name;
  doc["arithmetic"] = to_string(scenario.arithmetic);
  doc["seed"] = scenario.seed;

  ordered_json echo;
  echo["domain"] = domain_echo(scenario.domain, scenario.arithmetic);
  echo["atoms"] = ordered_json::array();
  for (const auto& a : scenario.atoms)
    echo["atoms"].push_back(ordered_json{{"m", scalar_echo(a.mass, scenario.arithmetic)},
                                         {"x", scalar_echo(a.position, scenario.arithmetic)},
                                         {"v", scalar_echo(a.velocity, scenario.arithmetic)}});
  if (scenario.horizon)
    echo["horizon"] = scalar_echo(*scenario.horizon, scenario.arithmetic);
  else
    echo["horizon"] = nullptr;
  echo["checks"] = ordered_json::array();
  for (const CheckKind kind : scenario.checks) echo["checks"].push_back(to_string(kind));
  doc["scenario"] = std::move(echo);

  ordered_json events;
  events["count"] = log.events().size();
  events["interior_merges"] = log.interior_merge_count();
  events["wall_absorptions"] = log.wall_event_count();
  events["complete"] = log.complete();
  if (log.equilibrium_time())
    events["equilibrium_time"] = value_json(*log.equilibrium_time());
  else
    events["equilibrium_time"] = nullptr;
  events["log"] = ordered_json::array();
  for (const auto& ev : log.events())
    events["log"].push_back(
        ordered_json{{"t", value_json(ev.time)},
                     {"y", value_json(ev.position)},
                     {"kind", ev.kind == EventKind::kInteriorMerge ? "merge" : "wall"},
                     {"first_atom", ev.resulting.first_atom},
                     {"last_atom", ev.resulting.last_atom}});
  doc["events"] = std::move(events);

  ordered_json limit;
  limit["diverges"] = lim.diverges;
  if (!lim.diverges && lim.profile) {
    limit["equilibrium_time"] = value_json(lim.profile->equilibrium_time);
    limit["atoms"] = ordered_json::array();
    for (const auto& a : lim.profile->limit_measure.atoms())
      limit["atoms"].push_back(
          ordered_json{{"m", value_json(a.mass)}, {"x", value_json(a.position)}});
  }
  doc["limit"] = std::move(limit);

  ordered_json series;
  series["columns"] =
      ordered_json::array({"t", "e", "theta", "metric_derivative", "energy", "n_clusters"});
  series["rows"] = times.size();
  doc["series"] = std::move(series);

  doc["checks"] = ordered_json::array();
  bundle.all_passed = true;
  for (auto& p : payloads) {
    ordered_json entry;
    entry["name"] = p.outcome.name;
    entry["status"] = p.outcome.status;
    entry["worst"] = p.outcome.worst;
    entry["tolerance"] = p.outcome.tolerance;
    entry["detail"] = p.outcome.detail;
    entry["data"] = std::move(p.data);
    doc["checks"].push_back(std::move(entry));
    bundle.all_passed = bundle.all_passed && p.outcome.passed;
    bundle.outcomes.push_back(std::move(p.outcome));
  }
  doc["all_passed"] = bundle.all_passed;

  bundle.document = dump_document(doc);
  bundle.summary_row = summary_row_from_document(bundle.document, "");
  return bundle;
}

}  // namespace

ResultBundle run_scenario(const Scenario& scenario,
                          std::optional<double> tolerance_override) {
  if (scenario.arithmetic == ArithmeticMode::kFloat64)
    return run_typed<double>(scenario, tolerance_override);
  return run_typed<Rational>(scenario, tolerance_override);
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

void write_bundle_files(const ResultBundle& bundle, const std::string& stem) {
  write_text_atomic(stem + ".result.json", bundle.document);
  write_text_atomic(stem + ".series.csv", bundle.series_csv);
}

std::string summary_header() {
  return "file,name,arithmetic,status,checks_passed,checks_total,events,worst";
}

std::string summary_row_from_document(const std::string& document, const std::string& file) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("result document: ") + e.what());
  }
  std::size_t passed = 0, total = 0;
  double worst = 0.0;
  for (const auto& entry : doc.at("checks")) {
    ++total;
    const std::string status = entry.at("status").get<std::string>();
    if (status != "fail") ++passed;
    worst = std::max(worst, entry.at("worst").get<double>());
  }
  std::string row = file;
  row += ",";
  row += doc.at("name").get<std::string>();
  row += ",";
  row += doc.at("arithmetic").get<std::string>();
  row += ",";
  row += passed == total ? "ok" : "fail";
  row += ",";
  row += std::to_string(passed);
  row += ",";
  row += std::to_string(total);
  row += ",";
  row += std::to_string(doc.at("events").at("count").get<std::size_t>());
  row += ",";
  row += format_float(worst);
  return row;
}

BatchSummary run_batch(const std::string& directory, std::size_t jobs,
                       std::optional<double> tolerance_override) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory))
    throw ScenarioError(directory + ": not a directory");

  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() != ".json") continue;
    if (name.size() > 12 && name.substr(name.size() - 12) == ".result.json") continue;
    inputs.push_back(entry.path());
  }
  std::sort(inputs.begin(), inputs.end());

  struct Slot {
    std::string row;
    bool input_error = false;
    bool check_failure = false;
  };
  std::vector<Slot> slots(inputs.size());

  std::vector<Scenario> scenarios(inputs.size());
  std::vector<bool> loaded(inputs.size(), false);
  std::map<std::string, std::size_t> first_use;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string file = inputs[i].filename().string();
    try {
      scenarios[i] = load_scenario(inputs[i].string());
      loaded[i] = true;
    } catch (const std::exception& e) {
      slots[i].row = file + ",-,-,error,0,0,0,nan";
      slots[i].input_error = true;
      slots[i].row += "\n#   " + std::string(e.what());
    }
    if (loaded[i]) {
      const auto [it, fresh] = first_use.emplace(scenarios[i].name, i);
      if (!fresh)
        throw ScenarioError(inputs[i].string() + ": duplicate scenario name \"" +
                            scenarios[i].name + "\" (also in " +
                            inputs[it->second].filename().string() + ")");
    }
  }

  std::atomic<std::size_t> cursor{0};
  const std::size_t workers =
      std::max<std::size_t>(1, std::min(jobs == 0 ? 1 : jobs, inputs.size()));
  auto work = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= inputs.size()) return;
      if (!loaded[i]) continue;
      const std::string file = inputs[i].filename().string();
      try {
        const ResultBundle bundle = run_scenario(scenarios[i], tolerance_override);
        std::string stem = inputs[i].string();
        stem.erase(stem.size() - 5);  // drop ".json"
        write_bundle_files(bundle, stem);
        const std::string document =
            [&] {
              std::ifstream in(stem + ".result.json", std::ios::binary);
              std::ostringstream buf;
              buf << in.rdbuf();
              return buf.str();
            }();
        slots[i].row = summary_row_from_document(document, file);
        slots[i].check_failure = !bundle.all_passed;
      } catch (const std::exception& e) {
        slots[i].row = file + ",-,-,error,0,0,0,nan";
        slots[i].input_error = true;
        slots[i].row += "\n#   " + std::string(e.what());
      }
    }
  };
  std::vector<std::future<void>> futures;
  for (std::size_t w = 0; w + 1 < workers; ++w)
    futures.push_back(std::async(std::launch::async, work));
  work();
  for (auto& f : futures) f.get();

  BatchSummary summary;
  summary.total = inputs.size();
  summary.table = summary_header() + "\n";
  for (const auto& slot : slots) {
    summary.table += slot.row + "\n";
    if (slot.input_error) ++summary.input_errors;
    if (slot.check_failure) ++summary.check_failures;
  }
  summary.all_passed = summary.input_errors == 0 && summary.check_failures == 0;
  return summary;
}

}  // namespace spslab
