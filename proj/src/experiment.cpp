// Copyright 2026 The spdelab Authors
// SPDX-License-Identifier: Apache-2.0

#include "spdelab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>

#include "spdelab/convergence_lab.hpp"
#include "spdelab/error_ops.hpp"
#include "spdelab/errors.hpp"
#include "spdelab/problem.hpp"
#include "spdelab/version.hpp"

namespace spdelab {

using Json = nlohmann::ordered_json;

namespace {

enum class KeyType { string, number, integer, boolean, levels, int_list, window };

struct KeySpec {
  const char* name;
  KeyType type;
};

constexpr KeySpec kKeys[] = {
    {"command", KeyType::string},      {"problem", KeyType::string},
    {"beta", KeyType::number},         {"intensity", KeyType::number},
    {"T", KeyType::number},            {"axis", KeyType::string},
    {"levels", KeyType::levels},       {"space", KeyType::string},
    {"fixed", KeyType::number},        {"ref_size", KeyType::integer},
    {"k_ref", KeyType::number},        {"samples", KeyType::integer},
    {"p", KeyType::number},            {"seed", KeyType::integer},
    {"basis_modes", KeyType::integer}, {"noise_modes", KeyType::integer},
    {"bias_check", KeyType::boolean},  {"id", KeyType::string},
    {"mu", KeyType::number},           {"nu", KeyType::number},
    {"rho", KeyType::number},          {"lags", KeyType::int_list},
    {"t0", KeyType::number},           {"trials", KeyType::integer},
    {"csv", KeyType::string},          {"manifest", KeyType::string},
    {"svg", KeyType::string},          {"threads", KeyType::integer},
    {"expect", KeyType::window},
};

const KeySpec* find_key(const std::string& name) {
  for (const auto& k : kKeys)
    if (name == k.name) return &k;
  return nullptr;
}

bool is_integer(const Json& v) {
  if (v.is_number_integer()) return true;
  if (!v.is_number_float()) return false;
  const double d = v.get<double>();
  return std::isfinite(d) && d == std::floor(d);
}

std::string type_error(const KeySpec& k) {
  switch (k.type) {
    case KeyType::string: return std::string(k.name) + " must be a string";
    case KeyType::number: return std::string(k.name) + " must be a number";
    case KeyType::integer: return std::string(k.name) + " must be a non-negative integer";
    case KeyType::boolean: return std::string(k.name) + " must be true or false";
    case KeyType::levels:
      return std::string(k.name) + " must be a level count or an array of positive numbers";
    case KeyType::int_list: return std::string(k.name) + " must be an array of positive integers";
    case KeyType::window: return std::string(k.name) + " must be an array [low, high]";
  }
  return k.name;
}

bool type_ok(const KeySpec& k, const Json& v) {
  switch (k.type) {
    case KeyType::string: return v.is_string();
    case KeyType::number: return v.is_number() && std::isfinite(v.get<double>());
    case KeyType::integer: return is_integer(v) && v.get<double>() >= 0.0;
    case KeyType::boolean: return v.is_boolean();
    case KeyType::levels:
      if (is_integer(v)) return v.get<double>() >= 1.0;
      if (!v.is_array() || v.empty()) return false;
      return std::all_of(v.begin(), v.end(), [](const Json& e) {
        return e.is_number() && std::isfinite(e.get<double>()) && e.get<double>() > 0.0;
      });
    case KeyType::int_list:
      if (!v.is_array() || v.empty()) return false;
      return std::all_of(v.begin(), v.end(),
                         [](const Json& e) { return is_integer(e) && e.get<double>() >= 1.0; });
    case KeyType::window:
      return v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number();
  }
  return false;
}

bool is_builtin(const std::string& name) {
  const auto names = builtin_problem_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::string join_names() {
  std::string out;
  for (const auto& n : builtin_problem_names()) out += (out.empty() ? "" : ", ") + n;
  return out;
}

// Defaults and range checks on top of the per-key type checks.
class Resolver {
 public:
  Resolver(const Json& in, Json& out, std::vector<std::string>& errors)
      : in_(in), out_(out), errors_(errors) {}

  bool has(const char* key) const { return in_.contains(key) && valid(key); }
  bool valid(const char* key) const {
    const KeySpec* k = find_key(key);
    return in_.contains(key) && k && type_ok(*k, in_.at(key));
  }
  void error(std::string msg) { errors_.push_back(std::move(msg)); }

  std::string str(const char* key, const std::string& def) {
    const std::string v = has(key) ? in_.at(key).get<std::string>() : def;
    out_[key] = v;
    return v;
  }
  double num(const char* key, double def) {
    const double v = has(key) ? in_.at(key).get<double>() : def;
    out_[key] = v;
    return v;
  }
  std::uint64_t integer(const char* key, std::uint64_t def) {
    const std::uint64_t v = has(key) ? static_cast<std::uint64_t>(in_.at(key).get<double>()) : def;
    out_[key] = v;
    return v;
  }
  bool boolean(const char* key, bool def) {
    const bool v = has(key) ? in_.at(key).get<bool>() : def;
    out_[key] = v;
    return v;
  }
  // Reports keys given in the input that the command does not use.
  void unused(std::initializer_list<const char*> keys, const std::string& command) {
    for (const char* k : keys)
      if (in_.contains(k)) error(std::string(k) + " is not used by the " + command + " command");
  }
  const Json& raw(const char* key) const { return in_.at(key); }

 private:
  const Json& in_;
  Json& out_;
  std::vector<std::string>& errors_;
};

std::vector<double> ladder(double first, double factor, std::size_t count) {
  std::vector<double> v;
  double x = first;
  for (std::size_t i = 0; i < count; ++i, x *= factor) v.push_back(x);
  return v;
}

std::vector<double> resolve_levels(Resolver& r, const Json& in, double first, double factor,
                                   std::size_t default_count, bool integers) {
  std::vector<double> lv;
  if (r.has("levels") && in.at("levels").is_array()) {
    for (const auto& e : in.at("levels")) lv.push_back(e.get<double>());
  } else {
    const std::size_t n = r.has("levels") ? static_cast<std::size_t>(in.at("levels").get<double>())
                                          : default_count;
    lv = ladder(first, factor, n);
  }
  if (integers)
    for (double v : lv)
      if (v != std::floor(v)) r.error("levels must be integer resolutions for this axis");
  return lv;
}

bool strictly_monotone(const std::vector<double>& v, bool increasing) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (increasing ? !(v[i] > v[i - 1]) : !(v[i] < v[i - 1])) return false;
  return true;
}

bool nested(double k, double base) {
  const double q = k / base;
  return q >= 1.0 - 1e-12 && std::fabs(q - std::round(q)) <= 1e-9 * q;
}

void resolve_problem(Resolver& r, Json& out, bool allow_all) {
  if (!r.valid("problem")) {
    if (allow_all) {
      out["problem"] = "all";
    } else {
      r.error("missing problem (one of " + join_names() + ")");
    }
  } else {
    const std::string name = r.str("problem", "");
    if (!(is_builtin(name) || (allow_all && name == "all")))
      r.error("unknown problem '" + name + "' (expected " + join_names() + ")");
  }
  if (r.valid("beta")) {
    const double beta = r.num("beta", 1.0);
    if (!(beta > 0.5))
      r.error("beta = " + (std::ostringstream() << beta).str() +
              " must exceed 1/2 for Q to be trace class (sum of m^{-2 beta} finite)");
  }
  if (r.valid("intensity")) {
    if (!(r.num("intensity", 1.0) > 0.0)) r.error("intensity must be positive");
  }
}

SpaceKind resolve_space(Resolver& r) {
  const std::string s = r.str("space", "spectral");
  if (s == "fem") return SpaceKind::fem_p1;
  if (s != "spectral") r.error("space must be 'spectral' or 'fem'");
  return SpaceKind::spectral;
}

void resolve_modes(Resolver& r, std::size_t default_basis, std::size_t need_dim, bool spectral) {
  const std::size_t basis = r.integer("basis_modes", std::max<std::size_t>(default_basis, 8));
  if (basis < 8) r.error("basis_modes must be at least 8");
  const std::size_t noise = r.integer("noise_modes", std::min<std::size_t>(512, basis));
  const std::size_t q = EigenBasis::default_quadrature_size(std::max<std::size_t>(basis, 1));
  if (noise < 1 || noise > q)
    r.error("noise_modes must lie in [1, " + std::to_string(q) + "] for basis_modes = " +
            std::to_string(basis));
  if (spectral && need_dim >= basis)
    r.error("spectral spaces up to dimension " + std::to_string(need_dim) +
            " need basis_modes > " + std::to_string(need_dim));
}

std::size_t pow2_above(std::size_t n) {
  std::size_t p = 1;
  while (p <= n) p *= 2;
  return p;
}

void resolve_window(Resolver& r, const Json& in, Json& out) {
  if (!r.valid("expect")) return;
  const double lo = in.at("expect")[0].get<double>(), hi = in.at("expect")[1].get<double>();
  if (!(lo < hi)) r.error("expect must satisfy low < high");
  out["expect"] = Json::array({lo, hi});
}

void resolve_converge(Resolver& r, const Json& in, Json& out) {
  resolve_problem(r, out, false);
  const SpaceKind kind = resolve_space(r);
  const bool spectral = kind == SpaceKind::spectral;
  std::string axis = r.str("axis", "");
  if (axis.empty()) {
    r.error("missing axis ('spatial' or 'temporal')");
    axis = "spatial";
  } else if (axis != "spatial" && axis != "temporal") {
    r.error("axis must be 'spatial' or 'temporal'");
  }
  if (r.valid("T") && !(r.num("T", 1.0) > 0.0)) r.error("T must be positive");
  const std::size_t samples = r.integer("samples", 200);
  if (samples < 2) r.error("samples must be at least 2");
  if (!(r.num("p", 2.0) >= 2.0)) r.error("p must be at least 2");
  const bool bias = r.boolean("bias_check", true);
  std::size_t need_dim = 0;
  if (axis == "spatial") {
    auto lv = resolve_levels(r, in, spectral ? 4.0 : 8.0, 2.0, 5, true);
    if (lv.size() < 3) r.error("a convergence study needs at least 3 levels");
    if (!strictly_monotone(lv, true)) r.error("spatial levels must be strictly increasing resolutions");
    out["levels"] = lv;
    const double finest = lv.empty() ? 1.0 : *std::max_element(lv.begin(), lv.end());
    const std::size_t ref = r.integer("ref_size", static_cast<std::size_t>(4.0 * finest));
    if (static_cast<double>(ref) < 4.0 * finest)
      r.error("ref_size must be at least 4x the finest level");
    if (!spectral)
      for (double v : lv)
        if (ref % static_cast<std::size_t>(v) != 0)
          r.error("ref_size must be a multiple of every FEM level");
    double k = std::ldexp(1.0, -12);
    if (r.has("fixed") && r.has("k_ref") && r.raw("fixed") != r.raw("k_ref"))
      r.error("on the spatial axis fixed and k_ref both name the time step and must agree");
    if (r.has("k_ref")) k = r.raw("k_ref").get<double>();
    if (r.has("fixed")) k = r.raw("fixed").get<double>();
    out["fixed"] = k;
    if (!(k > 0.0)) r.error("fixed time step must be positive");
    need_dim = bias ? 2 * ref : ref;
  } else {
    auto lv = resolve_levels(r, in, 0.125, 0.5, 6, false);
    if (lv.size() < 3) r.error("a convergence study needs at least 3 levels");
    if (!strictly_monotone(lv, false)) r.error("temporal levels must be strictly decreasing steps");
    out["levels"] = lv;
    const double fx = r.num("fixed", 64.0);
    if (fx < 1.0 || fx != std::floor(fx) || fx > 1e7)
      r.error("fixed must be a positive integer resolution on the temporal axis");
    const std::size_t fixed = fx >= 1.0 && fx <= 1e7 ? static_cast<std::size_t>(fx) : 1;
    const double k_ref = r.num("k_ref", std::ldexp(1.0, -12));
    const double k_min = lv.empty() ? 1.0 : *std::min_element(lv.begin(), lv.end());
    if (!(k_ref > 0.0)) r.error("k_ref must be positive");
    else if (k_ref > 0.25 * k_min * (1.0 + 1e-12))
      r.error("k_ref must be at most 1/4 of the smallest level step");
    else
      for (double k : lv)
        if (!nested(k, k_ref)) r.error("k_ref must divide every level step");
    r.unused({"ref_size"}, "temporal converge");
    need_dim = fixed;
  }
  resolve_modes(r, spectral ? std::max<std::size_t>(512, pow2_above(need_dim)) : 512, need_dim,
                spectral);
  resolve_window(r, in, out);
  r.unused({"id", "mu", "nu", "rho", "lags", "t0", "trials"}, "converge");
}

void resolve_holder(Resolver& r, const Json& in, Json& out) {
  resolve_problem(r, out, false);
  const SpaceKind kind = resolve_space(r);
  const double T = r.num("T", 1.0);
  if (!(T > 0.0)) r.error("T must be positive");
  const std::size_t ref = r.integer("ref_size", 256);
  if (ref < 1) r.error("ref_size must be positive");
  const double k = r.num("k_ref", std::ldexp(1.0, -14));
  if (!(k > 0.0)) r.error("k_ref must be positive");
  std::vector<std::size_t> lags{1, 2, 4, 8, 16, 32, 64};
  if (r.valid("lags")) {
    lags.clear();
    for (const auto& e : in.at("lags")) lags.push_back(static_cast<std::size_t>(e.get<double>()));
  }
  std::vector<double> lv(lags.begin(), lags.end());
  if (lags.size() < 2 || !strictly_monotone(lv, true))
    r.error("lags must hold at least two strictly increasing step counts");
  out["lags"] = lags;
  const double t0 = r.num("t0", 0.25 * T);
  if (t0 < 0.0 || (t0 > 0.0 && k > 0.0 && !nested(t0, k)))
    r.error("t0 must be a non-negative multiple of k_ref");
  if (k > 0.0 && t0 + static_cast<double>(lags.back()) * k > T * (1.0 + 1e-12))
    r.error("t0 plus the largest lag exceeds T");
  if (r.integer("samples", 200) < 2) r.error("samples must be at least 2");
  resolve_modes(r, std::max<std::size_t>(512, pow2_above(ref)), ref, kind == SpaceKind::spectral);
  resolve_window(r, in, out);
  r.unused({"axis", "levels", "fixed", "p", "bias_check", "id", "mu", "nu", "rho", "trials"},
           "holder");
}

void resolve_lemma(Resolver& r, const Json& in, Json& out) {
  std::optional<LemmaId> id;
  if (!r.valid("id")) {
    r.error("missing id (lemma identifier such as Fh1_i)");
  } else {
    try {
      id = parse_lemma_id(r.str("id", ""));
    } catch (const Error& e) {
      r.error(e.what());
    }
  }
  const SpaceKind kind = resolve_space(r);
  const double mu = r.num("mu", 2.0), nu = r.num("nu", 0.0), rho = r.num("rho", 0.0);
  if (mu < 0.0 || nu < 0.0 || rho < 0.0) r.error("mu, nu and rho must be non-negative");
  if (!(r.num("T", 1.0) > 0.0)) r.error("T must be positive");
  const bool time_levels = id && lemma_uses_time_levels(*id);
  std::vector<double> lv;
  if (time_levels) {
    lv = resolve_levels(r, in, 1.0 / 16.0, 0.5, 7, false);
    if (!strictly_monotone(lv, false)) r.error("time-step levels must be strictly decreasing");
  } else {
    lv = kind == SpaceKind::spectral ? resolve_levels(r, in, 4.0, 2.0, 6, true)
                                     : resolve_levels(r, in, 8.0, 2.0, 5, true);
    if (!strictly_monotone(lv, true)) r.error("space levels must be strictly increasing");
  }
  if (lv.size() < 2) r.error("a lemma check needs at least 2 levels");
  out["levels"] = lv;
  if (r.valid("fixed") && !(is_integer(in.at("fixed")) && in.at("fixed").get<double>() >= 0.0))
    r.error("fixed must be a non-negative integer resolution for lemma checks");
  else
    r.integer("fixed", 0);
  r.integer("ref_size", 0);
  resolve_window(r, in, out);
  r.unused({"problem", "beta", "intensity", "axis", "k_ref", "samples", "p", "bias_check",
            "basis_modes", "noise_modes", "lags", "t0", "trials"},
           "lemma");
}

void resolve_probe(Resolver& r, const Json& in, Json& out) {
  resolve_problem(r, out, true);
  if (r.integer("trials", 100) < 1) r.error("trials must be positive");
  resolve_modes(r, 256, 0, false);
  r.unused({"axis", "levels", "space", "fixed", "ref_size", "k_ref", "samples", "p", "bias_check",
            "id", "mu", "nu", "rho", "lags", "t0", "expect"},
           "probe");
  (void)in;
}

}  // namespace

ValidatedConfig validate_config(std::string_view text) {
  ValidatedConfig vc;
  const bool blank = std::all_of(text.begin(), text.end(),
                                 [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
  if (blank) {
    vc.errors.push_back("missing command");
    return vc;
  }
  Json in;
  try {
    in = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    vc.errors.push_back(std::string("invalid JSON: ") + e.what());
    return vc;
  }
  if (!in.is_object()) {
    vc.errors.push_back("configuration must be a JSON object");
    return vc;
  }
  for (const auto& [key, value] : in.items()) {
    const KeySpec* k = find_key(key);
    if (!k) {
      vc.errors.push_back("unknown key '" + key + "'");
    } else if (!type_ok(*k, value)) {
      vc.errors.push_back(type_error(*k));
    }
  }
  Json& out = vc.config;
  Resolver r(in, out, vc.errors);
  std::string command;
  if (!in.contains("command")) {
    vc.errors.insert(vc.errors.begin(), "missing command");
  } else if (r.valid("command")) {
    command = r.str("command", "");
  }
  if (command == "converge") {
    resolve_converge(r, in, out);
  } else if (command == "holder") {
    resolve_holder(r, in, out);
  } else if (command == "lemma") {
    resolve_lemma(r, in, out);
  } else if (command == "probe") {
    resolve_probe(r, in, out);
  } else if (in.contains("command")) {
    vc.errors.push_back("command must be one of lemma, converge, holder, probe");
  }
  r.integer("seed", 0);
  r.integer("threads", 0);
  r.str("csv", "results.csv");
  r.str("manifest", "manifest.json");
  if (r.valid("svg")) r.str("svg", "");
  return vc;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_digest(const Json& config) {
  Json sci = config;
  for (const char* k : {"csv", "manifest", "svg", "threads"}) sci.erase(k);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(sci.dump())));
  return buf;
}

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Row {
  std::string level, param, param_kind, samples, p, error, stderr_, slope, slope_stderr, pass;
};

struct Outcome {
  std::string experiment;
  std::vector<Row> rows;
  std::vector<std::pair<double, double>> points;  // (param, error) for the plot
  std::optional<RateFit> fit;
  std::string param_label;
  bool pass = false;
  Json result;
  std::string summary;
};

const char* verdict(bool pass) { return pass ? "PASS" : "FAIL"; }

ProblemSpec build_problem(const Json& c, const EigenBasis& basis, const std::string& name) {
  const std::size_t mn = c["noise_modes"].get<std::size_t>();
  ProblemSpec p = make_problem(name, basis, mn);
  if (c.contains("beta") || c.contains("intensity")) {
    const double beta = c.contains("beta") ? c["beta"].get<double>() : p.covariance.beta;
    const double inten =
        c.contains("intensity") ? c["intensity"].get<double>() : p.covariance.intensity;
    p.covariance = make_covariance(beta, mn, inten);
  }
  if (c.contains("T")) p.T = c["T"].get<double>();
  declare_bounds(p);
  return p;
}

EigenBasis build_basis(const Json& c) {
  const std::size_t m = c["basis_modes"].get<std::size_t>();
  return EigenBasis::build(m, EigenBasis::default_quadrature_size(m));
}

GalerkinSpace make_space(SpaceKind kind, const EigenBasis& basis, std::size_t n) {
  return kind == SpaceKind::spectral ? GalerkinSpace::spectral(basis, n) : GalerkinSpace::fem_p1(n);
}

std::pair<double, double> window_of(const Json& c, double lo, double hi) {
  if (c.contains("expect")) return {c["expect"][0].get<double>(), c["expect"][1].get<double>()};
  return {lo, hi};
}

Outcome run_converge(const Json& c) {
  const EigenBasis basis = build_basis(c);
  const std::string name = c["problem"].get<std::string>();
  const ProblemSpec problem = build_problem(c, basis, name);
  const SpaceKind kind = c["space"] == "fem" ? SpaceKind::fem_p1 : SpaceKind::spectral;
  const bool spatial = c["axis"] == "spatial";
  const auto lv = c["levels"].get<std::vector<double>>();
  std::vector<Discretization> levels;
  Discretization ref{make_space(kind, basis, 1), 0.0};
  if (spatial) {
    const double k = c["fixed"].get<double>();
    for (double n : lv) levels.push_back({make_space(kind, basis, static_cast<std::size_t>(n)), k});
    ref = {make_space(kind, basis, c["ref_size"].get<std::size_t>()), k};
  } else {
    const GalerkinSpace sp = make_space(kind, basis, static_cast<std::size_t>(c["fixed"].get<double>()));
    for (double k : lv) levels.push_back({sp, k});
    ref = {sp, c["k_ref"].get<double>()};
  }
  const StudySpec spec{.axis = spatial ? Axis::spatial : Axis::temporal,
                       .levels = levels,
                       .ref = ref,
                       .samples = c["samples"].get<std::size_t>(),
                       .p = c["p"].get<double>(),
                       .base_seed = c["seed"].get<std::uint64_t>(),
                       .bias_check = c["bias_check"].get<bool>(),
                       .threads = c["threads"].get<std::size_t>()};
  const ConvergenceReport rep = convergence_study(problem, spec);

  const double expected = spatial ? 1.0 + problem.r : 0.5;
  const auto [lo, hi] = window_of(c, expected - (spatial ? 0.3 : 0.12), expected + (spatial ? 0.3 : 0.12));
  Outcome o;
  o.experiment = "converge/" + name + "/" + to_string(spec.axis);
  o.param_label = spatial ? "h" : "k";
  const std::string samples = std::to_string(spec.samples), pp = g17(spec.p);
  for (std::size_t i = 0; i < rep.levels.size(); ++i) {
    const auto& l = rep.levels[i];
    o.rows.push_back({std::to_string(i), g17(l.param), o.param_label, samples, pp,
                      g17(l.estimate.value), g17(l.estimate.stderr_), "", "", ""});
    o.points.push_back({l.param, l.estimate.value});
  }
  const bool complete = rep.failure.empty() && rep.levels.size() == levels.size();
  const bool in_window = complete && rep.fit.slope >= lo && rep.fit.slope <= hi;
  const bool bias_ok = !spec.bias_check || (rep.bias.performed && rep.bias.pass);
  o.pass = in_window && rep.monotone && bias_ok;
  if (complete) o.fit = rep.fit;
  o.rows.push_back({"slope", "", o.param_label, samples, pp, "", "",
                    complete ? g17(rep.fit.slope) : "", complete ? g17(rep.fit.slope_stderr) : "",
                    verdict(o.pass)});
  o.result = {{"slope", rep.fit.slope},
              {"slope_stderr", rep.fit.slope_stderr},
              {"slope_ci", Json::array({rep.slope_ci_low, rep.slope_ci_high})},
              {"window", Json::array({lo, hi})},
              {"eval_time", rep.eval_time},
              {"monotone", rep.monotone},
              {"bias_check",
               {{"performed", rep.bias.performed},
                {"error_ref", rep.bias.error_ref},
                {"error_finer", rep.bias.error_finer},
                {"relative_change", rep.bias.relative_change},
                {"pass", rep.bias.pass}}},
              {"failure", rep.failure},
              {"pass", o.pass}};
  std::ostringstream s;
  s << o.experiment << ": slope " << g17(rep.fit.slope).substr(0, 8) << " +- "
    << g17(rep.fit.slope_stderr).substr(0, 6) << ", window [" << lo << ", " << hi << "]";
  if (!rep.monotone) s << ", errors not monotone";
  if (spec.bias_check) s << ", bias change " << rep.bias.relative_change;
  if (!rep.failure.empty()) s << ", aborted: " << rep.failure;
  s << " -> " << verdict(o.pass);
  o.summary = s.str();
  return o;
}

Outcome run_holder(const Json& c) {
  const EigenBasis basis = build_basis(c);
  const std::string name = c["problem"].get<std::string>();
  const ProblemSpec problem = build_problem(c, basis, name);
  const SpaceKind kind = c["space"] == "fem" ? SpaceKind::fem_p1 : SpaceKind::spectral;
  const Discretization ref{make_space(kind, basis, c["ref_size"].get<std::size_t>()),
                           c["k_ref"].get<double>()};
  const auto lags = c["lags"].get<std::vector<std::size_t>>();
  const ConvergenceReport rep =
      holder_check(problem, ref, lags, c["t0"].get<double>(), c["samples"].get<std::size_t>(),
                   c["seed"].get<std::uint64_t>(), c["threads"].get<std::size_t>());
  const auto [lo, hi] = window_of(c, 0.4, 0.6);
  Outcome o;
  o.experiment = "holder/" + name;
  o.param_label = "lag";
  const std::string samples = std::to_string(c["samples"].get<std::size_t>());
  for (std::size_t i = 0; i < rep.levels.size(); ++i) {
    const auto& l = rep.levels[i];
    o.rows.push_back({std::to_string(i), g17(l.param), "lag", samples, "2",
                      g17(l.estimate.value), g17(l.estimate.stderr_), "", "", ""});
    o.points.push_back({l.param, l.estimate.value});
  }
  o.pass = rep.fit.slope >= lo && rep.fit.slope <= hi;
  o.fit = rep.fit;
  o.rows.push_back({"slope", "", "lag", samples, "2", "", "", g17(rep.fit.slope),
                    g17(rep.fit.slope_stderr), verdict(o.pass)});
  o.result = {{"slope", rep.fit.slope},
              {"slope_stderr", rep.fit.slope_stderr},
              {"window", Json::array({lo, hi})},
              {"monotone", rep.monotone},
              {"pass", o.pass}};
  std::ostringstream s;
  s << o.experiment << ": slope " << rep.fit.slope << " +- " << rep.fit.slope_stderr
    << ", window [" << lo << ", " << hi << "] -> " << verdict(o.pass);
  o.summary = s.str();
  return o;
}

Outcome run_lemma(const Json& c) {
  const LemmaId id = parse_lemma_id(c["id"].get<std::string>());
  const SpaceKind kind = c["space"] == "fem" ? SpaceKind::fem_p1 : SpaceKind::spectral;
  LemmaParams lp;
  lp.mu = c["mu"].get<double>();
  lp.nu = c["nu"].get<double>();
  lp.rho = c["rho"].get<double>();
  lp.T = c["T"].get<double>();
  lp.fine_resolution = c["fixed"].get<std::size_t>();
  lp.ref_modes = c["ref_size"].get<std::size_t>();
  const RateReport rep = lemma_rate_check(id, lp, kind, c["levels"].get<std::vector<double>>());
  Outcome o;
  o.experiment = "lemma/" + rep.lemma + "/" + rep.space_kind;
  o.param_label = rep.param_kind;
  bool pass = rep.pass;
  std::pair<double, double> win{rep.expected - rep.tolerance, rep.expected + rep.tolerance};
  if (c.contains("expect") && rep.check == CheckKind::rate) {
    win = window_of(c, 0, 0);
    pass = rep.slope >= win.first && rep.slope <= win.second;
    if (rep.interior_required)
      for (const auto& l : rep.levels) pass = pass && l.interior;
  }
  o.pass = pass;
  for (std::size_t i = 0; i < rep.levels.size(); ++i) {
    const auto& l = rep.levels[i];
    o.rows.push_back({std::to_string(i), g17(l.param), rep.param_kind, "0", "", g17(l.value), "0",
                      "", "", ""});
    o.points.push_back({l.param, l.value});
  }
  if (rep.check == CheckKind::rate) o.fit = RateFit{rep.slope, rep.intercept, rep.slope_stderr};
  o.rows.push_back({"slope", "", rep.param_kind, "0", "", "", "", g17(rep.slope),
                    g17(rep.slope_stderr), verdict(o.pass)});
  Json levels = Json::array();
  for (const auto& l : rep.levels)
    levels.push_back({{"param", l.param},
                      {"resolution", l.resolution},
                      {"value", l.value},
                      {"argmax_t", l.argmax_t},
                      {"interior", l.interior},
                      {"ratio", l.ratio}});
  const char* check = rep.check == CheckKind::rate ? "rate" : rep.check == CheckKind::bounded ? "bounded" : "bound";
  o.result = {{"check", check},          {"expected", rep.expected}, {"tolerance", rep.tolerance},
              {"slope", rep.slope},      {"slope_stderr", rep.slope_stderr},
              {"levels", levels},        {"pass", o.pass}};
  std::ostringstream s;
  s << o.experiment << " (" << check << "): slope " << rep.slope << ", expected " << rep.expected
    << " +- " << rep.tolerance << " -> " << verdict(o.pass);
  o.summary = s.str();
  return o;
}

Outcome run_probe(const Json& c) {
  const EigenBasis basis = build_basis(c);
  std::vector<std::string> names;
  const std::string which = c["problem"].get<std::string>();
  if (which == "all") names = builtin_problem_names();
  else names.push_back(which);
  const std::size_t trials = c["trials"].get<std::size_t>();
  const std::uint64_t seed = c["seed"].get<std::uint64_t>();
  Outcome o;
  o.experiment = "probe/" + which;
  o.param_label = "bound";
  o.pass = true;
  Json results = Json::array();
  std::ostringstream s;
  for (const auto& name : names) {
    const ProblemSpec p = build_problem(c, basis, name);
    const LipschitzReport lr = lipschitz_probe(p, trials, seed);
    const GrowthReport gr = growth_probe(p, trials, seed);
    const bool growth_ok = std::isfinite(gr.overall_max);
    const bool ok = lr.within_bounds && growth_ok;
    o.pass = o.pass && ok;
    const std::string t = std::to_string(trials);
    o.rows.push_back({name + ":f_ratio", g17(lr.f_bound), "bound", t, "", g17(lr.f_ratio_max), "",
                      "", "", verdict(lr.f_ratio_max <= 1.05 * lr.f_bound)});
    o.rows.push_back({name + ":g_ratio", g17(lr.g_bound), "bound", t, "", g17(lr.g_ratio_max), "",
                      "", "", verdict(lr.g_ratio_max <= 1.05 * lr.g_bound)});
    o.rows.push_back({name + ":growth", "", "bound", t, "", g17(gr.overall_max), "", "", "",
                      verdict(growth_ok)});
    results.push_back({{"problem", name},
                       {"f_ratio_max", lr.f_ratio_max},
                       {"f_bound", lr.f_bound},
                       {"g_ratio_max", lr.g_ratio_max},
                       {"g_bound", lr.g_bound},
                       {"growth_ratio_max", gr.overall_max},
                       {"pass", ok}});
    s << "probe/" << name << ": f " << lr.f_ratio_max << " <= " << lr.f_bound << ", g "
      << lr.g_ratio_max << " <= " << lr.g_bound << ", growth " << gr.overall_max << " -> "
      << verdict(ok) << "\n";
  }
  o.result = {{"problems", results}, {"pass", o.pass}};
  o.summary = s.str();
  if (!o.summary.empty()) o.summary.pop_back();
  return o;
}

std::string render_csv(const Outcome& o, const std::string& digest) {
  std::string out = "experiment,config_digest,level,param,param_kind,samples,p,error,stderr,slope,slope_stderr,pass\n";
  for (const auto& r : o.rows) {
    out += o.experiment + "," + digest + "," + r.level + "," + r.param + "," + r.param_kind + "," +
           r.samples + "," + r.p + "," + r.error + "," + r.stderr_ + "," + r.slope + "," +
           r.slope_stderr + "," + r.pass + "\n";
  }
  return out;
}

std::string render_svg(const Outcome& o) {
  const double W = 640, H = 480, L = 70, R = 20, Tp = 30, B = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (auto [x, y] : o.points) {
    if (x <= 0 || y <= 0) continue;
    x0 = std::min(x0, std::log10(x)); x1 = std::max(x1, std::log10(x));
    y0 = std::min(y0, std::log10(y)); y1 = std::max(y1, std::log10(y));
  }
  if (x0 > x1) { x0 = 0; x1 = 1; y0 = 0; y1 = 1; }
  if (x1 - x0 < 1e-12) { x0 -= 0.5; x1 += 0.5; }
  if (y1 - y0 < 1e-12) { y0 -= 0.5; y1 += 0.5; }
  const double px = 0.05 * (x1 - x0), py = 0.05 * (y1 - y0);
  x0 -= px; x1 += px; y0 -= py; y1 += py;
  auto sx = [&](double lx) { return L + (lx - x0) / (x1 - x0) * (W - L - R); };
  auto sy = [&](double ly) { return H - B - (ly - y0) / (y1 - y0) * (H - Tp - B); };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << o.experiment << "</text>\n"
    << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << L << "\" y1=\"" << Tp << "\" x2=\"" << L << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n"
    << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">log10 "
    << o.param_label << "</text>\n"
    << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
    << ")\" text-anchor=\"middle\">log10 error</text>\n";
  for (double t : {x0, x1})
    s << "<text x=\"" << sx(t) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
      << std::round(t * 100) / 100 << "</text>\n";
  for (double t : {y0, y1})
    s << "<text x=\"" << L - 6 << "\" y=\"" << sy(t) + 4 << "\" text-anchor=\"end\">"
      << std::round(t * 100) / 100 << "</text>\n";
  if (o.fit) {
    const double ln10 = std::log(10.0);
    auto fy = [&](double lx) { return (o.fit->intercept + o.fit->slope * lx * ln10) / ln10; };
    s << "<line x1=\"" << sx(x0) << "\" y1=\"" << sy(fy(x0)) << "\" x2=\"" << sx(x1) << "\" y2=\""
      << sy(fy(x1)) << "\" stroke=\"steelblue\"/>\n"
      << "<text x=\"" << W - R << "\" y=\"" << Tp + 10 << "\" text-anchor=\"end\">slope "
      << o.fit->slope << "</text>\n";
  }
  for (auto [x, y] : o.points)
    if (x > 0 && y > 0)
      s << "<circle cx=\"" << sx(std::log10(x)) << "\" cy=\"" << sy(std::log10(y))
        << "\" r=\"4\" fill=\"crimson\"/>\n";
  s << "</svg>\n";
  return s.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool write_file(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) return false;
  f << body;
  f.close();
  return !f.fail();
}

}  // namespace

ExperimentOutcome run_experiment(std::string_view text) {
  ExperimentOutcome out;
  ValidatedConfig vc = validate_config(text);
  if (vc.ok()) {
    if (const char* env = std::getenv("SPDELAB_SEED")) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(env, &end, 10);
      if (end == env || *end != '\0') vc.errors.push_back("SPDELAB_SEED must be a non-negative integer");
      else vc.config["seed"] = static_cast<std::uint64_t>(v);
    }
  }
  if (!vc.ok()) {
    out.exit_code = kExitConfig;
    for (const auto& e : vc.errors) out.diagnostics += "config error: " + e + "\n";
    return out;
  }
  const Json& c = vc.config;
  out.digest = config_digest(c);
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    const std::string cmd = c["command"].get<std::string>();
    if (cmd == "converge") o = run_converge(c);
    else if (cmd == "holder") o = run_holder(c);
    else if (cmd == "lemma") o = run_lemma(c);
    else o = run_probe(c);
  } catch (const ConfigurationError& e) {
    out.exit_code = kExitConfig;
    out.diagnostics = std::string("config error: ") + e.what() + "\n";
    return out;
  } catch (const std::exception& e) {
    o = Outcome{};
    o.experiment = c["command"].get<std::string>();
    o.pass = false;
    o.summary = std::string("run failed: ") + e.what();
    o.result = {{"failure", e.what()}, {"pass", false}};
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  out.csv = render_csv(o, out.digest);
  Json manifest = {{"tool", "spdelab"},
                   {"version", kVersion},
                   {"config", c},
                   {"config_digest", out.digest},
                   {"experiment", o.experiment},
                   {"result", o.result},
                   {"wall_time_s", wall},
                   {"timestamp", utc_timestamp()}};
  const std::string csv_path = c["csv"].get<std::string>();
  const std::string manifest_path = c["manifest"].get<std::string>();
  if (!write_file(csv_path, out.csv)) {
    out.exit_code = kExitIo;
    out.diagnostics = "I/O error: cannot write " + csv_path + "\n";
    return out;
  }
  if (!write_file(manifest_path, manifest.dump(2) + "\n")) {
    out.exit_code = kExitIo;
    out.diagnostics = "I/O error: cannot write " + manifest_path + "\n";
    return out;
  }
  if (c.contains("svg") && !write_file(c["svg"].get<std::string>(), render_svg(o))) {
    out.exit_code = kExitIo;
    out.diagnostics = "I/O error: cannot write " + c["svg"].get<std::string>() + "\n";
    return out;
  }
  out.exit_code = o.pass ? kExitPass : kExitFail;
  out.diagnostics = o.summary + "\n";
  return out;
}

}  // namespace spdelab
