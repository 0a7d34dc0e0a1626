#include "brwlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "brwlab/error.hpp"
#include "json.hpp"

namespace brwlab {

namespace {

using json = nlohmann::ordered_json;

// Already carries origin, line and field.
class LocatedError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct Source {
  std::string_view text;
  std::string origin;
};

// Line of the last key of `path` found by a forward scan of the text.
std::size_t locate(std::string_view text, const std::vector<std::string>& path) {
  std::size_t pos = 0, hit = 0;
  bool found = false;
  for (const auto& key : path) {
    if (!key.empty() && key.front() == '[') continue;
    auto p = text.find("\"" + key + "\"", pos);
    if (p == std::string_view::npos) break;
    pos = hit = p;
    found = true;
  }
  if (!found) return 1;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(hit), '\n'));
}

class Node {
 public:
  Node(const json& j, std::vector<std::string> path, const Source& src) : j_(j), path_(std::move(path)), src_(src) {}

  const json& raw() const { return j_; }

  std::string field() const {
    std::string s;
    for (const auto& k : path_) {
      if (!s.empty() && k.front() != '[') s += '.';
      s += k;
    }
    return s.empty() ? "<root>" : s;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw LocatedError(src_.origin + ":" + std::to_string(locate(src_.text, path_)) + ": " + field() + ": " + msg);
  }

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  Node child(const std::string& key) const {
    auto p = path_;
    p.push_back(key);
    if (!has(key)) Node(j_, path_, src_).fail("missing required field '" + key + "'");
    return Node(j_.at(key), std::move(p), src_);
  }

  Node element(std::size_t i) const {
    auto p = path_;
    p.push_back("[" + std::to_string(i) + "]");
    return Node(j_.at(i), std::move(p), src_);
  }

  void expect_object() const {
    if (!j_.is_object()) fail("expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    expect_object();
    for (const auto& [k, v] : j_.items()) {
      bool ok = false;
      for (const char* a : keys) ok = ok || k == a;
      if (!ok) child(k).fail("unknown field");
    }
  }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }

  std::uint64_t uint() const {
    if (j_.is_number_unsigned()) return j_.get<std::uint64_t>();
    if (j_.is_number_integer()) fail("expected a non-negative integer");
    if (j_.is_number_float()) {
      double d = j_.get<double>();
      if (d >= 0.0 && d <= 9007199254740992.0 && std::floor(d) == d) return static_cast<std::uint64_t>(d);
    }
    fail("expected a non-negative integer");
  }

  std::string str() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }

  bool boolean() const {
    if (!j_.is_boolean()) fail("expected true or false");
    return j_.get<bool>();
  }

  std::size_t size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }

  double num(const std::string& key, double def) const { return has(key) ? child(key).number() : def; }
  std::uint64_t uint(const std::string& key, std::uint64_t def) const { return has(key) ? child(key).uint() : def; }

  std::vector<double> numbers() const {
    std::vector<double> v;
    for (std::size_t i = 0; i < size(); ++i) v.push_back(element(i).number());
    return v;
  }

 private:
  const json& j_;
  std::vector<std::string> path_;
  const Source& src_;
};

template <class F>
auto guarded(const Node& n, F&& f) {
  try {
    return f();
  } catch (const LocatedError&) {
    throw;
  } catch (const Error& e) {
    n.fail(e.what());
  }
}

OffspringLaw parse_offspring(const Node& n) {
  std::string law = n.child("law").str();
  if (law == "deterministic") {
    n.allow({"law", "k"});
    return DeterministicCount{n.uint("k", 2)};
  }
  if (law == "poisson") {
    n.allow({"law", "lambda"});
    return PoissonCount{n.child("lambda").number()};
  }
  if (law == "geometric") {
    n.allow({"law", "p"});
    return GeometricCount{n.child("p").number()};
  }
  if (law == "zeta") {
    n.allow({"law", "s"});
    return ZetaCount{n.child("s").number()};
  }
  if (law == "log_pareto") {
    n.allow({"law", "power", "k0"});
    return LogParetoCount{n.child("power").number(), n.uint("k0", 2)};
  }
  n.child("law").fail("unknown offspring law '" + law + "'");
}

DisplacementLaw parse_displacement(const Node& n) {
  std::string law = n.child("law").str();
  if (law == "none") {
    n.allow({"law"});
    return NoDisplacement{};
  }
  if (law == "fixed") {
    n.allow({"law", "positions"});
    return FixedPositions{n.child("positions").numbers()};
  }
  if (law == "normal") {
    n.allow({"law", "mean", "sd"});
    return NormalDisplacement{n.num("mean", 0.0), n.num("sd", 1.0)};
  }
  if (law == "two_point") {
    n.allow({"law", "a", "b", "prob_a"});
    return TwoPointDisplacement{n.child("a").number(), n.child("b").number(), n.num("prob_a", 0.5)};
  }
  n.child("law").fail("unknown displacement law '" + law + "'");
}

MLaw parse_m(const Node& n) {
  std::string law = n.child("law").str();
  if (law == "const") {
    n.allow({"law", "value"});
    return ConstM{n.child("value").number()};
  }
  if (law == "exp_neg") {
    n.allow({"law", "rate"});
    return ExpM{n.child("rate").number()};
  }
  if (law == "uniform") {
    n.allow({"law", "lo", "hi"});
    return UniformM{n.num("lo", 0.0), n.num("hi", 1.0)};
  }
  if (law == "cycle") {
    n.allow({"law", "values"});
    return CycleM{n.child("values").numbers()};
  }
  n.child("law").fail("unknown M law '" + law + "'");
}

QLaw parse_q(const Node& n) {
  std::string law = n.child("law").str();
  if (law == "const") {
    n.allow({"law", "value"});
    return ConstQ{n.child("value").number()};
  }
  if (law == "log_pareto") {
    n.allow({"law", "index", "scale"});
    return LogParetoQ{n.child("index").number(), n.num("scale", 1.0)};
  }
  if (law == "coupled") {
    n.allow({"law", "intercept", "slope", "noise_sd"});
    return CoupledQ{n.num("intercept", 0.0), n.num("slope", 0.0), n.num("noise_sd", 0.0)};
  }
  n.child("law").fail("unknown Q law '" + law + "'");
}

StepLaw parse_step(const Node& n) {
  std::string law = n.child("law").str();
  if (law == "normal") {
    n.allow({"law", "mean", "sd"});
    return NormalStep{n.child("mean").number(), n.num("sd", 1.0)};
  }
  if (law == "shifted_exp") {
    n.allow({"law", "rate", "shift"});
    return ShiftedExpStep{n.num("rate", 1.0), n.num("shift", 0.0)};
  }
  if (law == "two_point") {
    n.allow({"law", "a", "b", "prob_a"});
    return TwoPointStep{n.child("a").number(), n.child("b").number(), n.num("prob_a", 0.5)};
  }
  if (law == "constant") {
    n.allow({"law", "value"});
    return ConstantStep{n.child("value").number()};
  }
  if (law == "empirical") {
    n.allow({"law", "values", "weights"});
    EmpiricalStep e{n.child("values").numbers(), {}};
    e.weights = n.has("weights") ? n.child("weights").numbers() : std::vector<double>(e.values.size(), 1.0);
    return e;
  }
  if (law == "pareto") {
    n.allow({"law", "index", "scale", "shift"});
    return ParetoStep{n.child("index").number(), n.num("scale", 1.0), n.num("shift", 0.0)};
  }
  n.child("law").fail("unknown step law '" + law + "'");
}

RegVarFn parse_function(const Node& n, Role role) {
  if (n.raw().is_string()) {
    auto f = guarded(n, [&] { return parse_regvar(n.str()); });
    if (f.role() != role) n.fail("role prefix does not match the key");
    return f;
  }
  n.allow({"role", "exponent", "slowly_varying"});
  if (n.has("role") && n.child("role").str() != to_string(role)) n.child("role").fail("role does not match the key");
  SlowlyVarying sv;
  if (n.has("slowly_varying")) {
    Node list = n.child("slowly_varying");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Node t = list.element(i);
      t.allow({"kind", "value", "power"});
      std::string kind = t.child("kind").str();
      if (kind == "constant")
        sv.constant *= t.child("value").number();
      else if (kind == "log")
        sv.log_power += t.child("power").number();
      else if (kind == "loglog")
        sv.loglog_power += t.child("power").number();
      else
        t.child("kind").fail("unknown slowly varying factor '" + kind + "'");
    }
  }
  double rho = n.child("exponent").number();
  return guarded(n, [&] { return RegVarFn(role, rho, sv); });
}

json dump_function(const RegVarFn& f) {
  json sv = json::array();
  const auto& L = f.slowly_varying();
  if (L.constant != 1.0) sv.push_back({{"kind", "constant"}, {"value", L.constant}});
  if (L.log_power != 0.0) sv.push_back({{"kind", "log"}, {"power", L.log_power}});
  if (L.loglog_power != 0.0) sv.push_back({{"kind", "loglog"}, {"power", L.loglog_power}});
  return {{"role", std::string(to_string(f.role()))}, {"exponent", f.exponent()}, {"slowly_varying", sv}};
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json dump(const OffspringLaw& l) {
  return std::visit(overloaded{
                        [](const DeterministicCount& d) { return json{{"law", "deterministic"}, {"k", d.k}}; },
                        [](const PoissonCount& p) { return json{{"law", "poisson"}, {"lambda", p.lambda}}; },
                        [](const GeometricCount& g) { return json{{"law", "geometric"}, {"p", g.p}}; },
                        [](const ZetaCount& z) { return json{{"law", "zeta"}, {"s", z.s}}; },
                        [](const LogParetoCount& l) {
                          return json{{"law", "log_pareto"}, {"power", l.power}, {"k0", l.k0}};
                        },
                    },
                    l);
}

json dump(const DisplacementLaw& l) {
  return std::visit(overloaded{
                        [](const NoDisplacement&) { return json{{"law", "none"}}; },
                        [](const FixedPositions& f) { return json{{"law", "fixed"}, {"positions", f.positions}}; },
                        [](const NormalDisplacement& n) {
                          return json{{"law", "normal"}, {"mean", n.mean}, {"sd", n.sd}};
                        },
                        [](const TwoPointDisplacement& t) {
                          return json{{"law", "two_point"}, {"a", t.a}, {"b", t.b}, {"prob_a", t.prob_a}};
                        },
                    },
                    l);
}

json dump(const MLaw& l) {
  return std::visit(overloaded{
                        [](const ConstM& c) { return json{{"law", "const"}, {"value", c.value}}; },
                        [](const ExpM& e) { return json{{"law", "exp_neg"}, {"rate", e.rate}}; },
                        [](const UniformM& u) { return json{{"law", "uniform"}, {"lo", u.lo}, {"hi", u.hi}}; },
                        [](const CycleM& c) { return json{{"law", "cycle"}, {"values", c.values}}; },
                    },
                    l);
}

json dump(const QLaw& l) {
  return std::visit(overloaded{
                        [](const ConstQ& c) { return json{{"law", "const"}, {"value", c.value}}; },
                        [](const LogParetoQ& p) {
                          return json{{"law", "log_pareto"}, {"index", p.index}, {"scale", p.scale}};
                        },
                        [](const CoupledQ& c) {
                          return json{{"law", "coupled"},
                                      {"intercept", c.intercept},
                                      {"slope", c.slope},
                                      {"noise_sd", c.noise_sd}};
                        },
                    },
                    l);
}

json dump(const StepLaw& l) {
  return std::visit(overloaded{
                        [](const NormalStep& n) { return json{{"law", "normal"}, {"mean", n.mean}, {"sd", n.sd}}; },
                        [](const ShiftedExpStep& s) {
                          return json{{"law", "shifted_exp"}, {"rate", s.rate}, {"shift", s.shift}};
                        },
                        [](const TwoPointStep& t) {
                          return json{{"law", "two_point"}, {"a", t.a}, {"b", t.b}, {"prob_a", t.prob_a}};
                        },
                        [](const ConstantStep& c) { return json{{"law", "constant"}, {"value", c.value}}; },
                        [](const EmpiricalStep& e) {
                          return json{{"law", "empirical"}, {"values", e.values}, {"weights", e.weights}};
                        },
                        [](const ParetoStep& p) {
                          return json{{"law", "pareto"}, {"index", p.index}, {"scale", p.scale}, {"shift", p.shift}};
                        },
                    },
                    l);
}

void parse_params(const Node& n, Params& p) {
  n.allow({"n_max", "m_max", "depth", "xs", "identity_n", "mu_replicas", "m", "families", "log_x_km", "log_x_haan",
           "tail_lo", "tail_hi", "ladder_x", "moment_depth", "moment_replicas", "expect_divergent"});
  p.n_max = n.uint("n_max", p.n_max);
  p.m_max = n.uint("m_max", p.m_max);
  p.depth = n.uint("depth", p.depth);
  if (n.has("xs")) {
    p.xs = n.child("xs").numbers();
    if (p.xs.empty()) n.child("xs").fail("needs at least one threshold");
    for (double x : p.xs)
      if (!(x > 0.0) || !std::isfinite(x)) n.child("xs").fail("thresholds must be positive");
  }
  if (n.has("identity_n")) {
    Node l = n.child("identity_n");
    p.identity_n.clear();
    for (std::size_t i = 0; i < l.size(); ++i) {
      auto v = l.element(i).uint();
      if (v < 1) l.element(i).fail("generation must be >= 1");
      p.identity_n.push_back(v);
    }
  }
  p.mu_replicas = n.uint("mu_replicas", p.mu_replicas);
  p.m = n.uint("m", p.m);
  if (n.has("families")) {
    Node l = n.child("families");
    p.families.clear();
    for (std::size_t i = 0; i < l.size(); ++i) {
      Node e = l.element(i);
      auto s = e.str();
      guarded(e, [&] { return parse_regvar(s); });
      p.families.push_back(s);
    }
  }
  p.log_x_km = n.num("log_x_km", p.log_x_km);
  p.log_x_haan = n.num("log_x_haan", p.log_x_haan);
  p.tail_lo = n.num("tail_lo", p.tail_lo);
  p.tail_hi = n.num("tail_hi", p.tail_hi);
  if (!(p.tail_lo < p.tail_hi)) n.fail("tail_lo must be below tail_hi");
  p.ladder_x = n.num("ladder_x", p.ladder_x);
  p.moment_depth = n.uint("moment_depth", p.moment_depth);
  p.moment_replicas = n.uint("moment_replicas", p.moment_replicas);
  if (n.has("expect_divergent")) p.expect_divergent = n.child("expect_divergent").boolean();
  if (p.depth < 2 * p.m_max) n.fail("depth must be at least 2 m_max");
  if (p.m_max < 2) n.fail("m_max must be >= 2");
  if (p.n_max < 1) n.fail("n_max must be >= 1");
  if (p.m < 1) n.fail("m must be >= 1");
}

void parse_tolerances(const Node& n, Tolerances& t) {
  n.allow({"sigma", "ks", "stabilizing", "relative_floor", "renewal_band", "hat_gap", "km_band", "haan_band",
           "kappa_band", "karamata_band", "slope"});
  auto pos = [&](const char* key, double& v) {
    if (!n.has(key)) return;
    v = n.child(key).number();
    if (!(v > 0.0) || !std::isfinite(v)) n.child(key).fail("must be positive");
  };
  pos("sigma", t.sigma);
  pos("ks", t.ks);
  pos("stabilizing", t.stabilizing);
  pos("relative_floor", t.relative_floor);
  pos("renewal_band", t.renewal_band);
  pos("hat_gap", t.hat_gap);
  pos("km_band", t.km_band);
  pos("haan_band", t.haan_band);
  pos("kappa_band", t.kappa_band);
  pos("karamata_band", t.karamata_band);
  pos("slope", t.slope);
  if (t.stabilizing > 1.0) n.child("stabilizing").fail("is a fraction in (0, 1]");
}

}  // namespace

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::martingale:
      return "martingale";
    case Experiment::series:
      return "series";
    case Experiment::renewal:
      return "renewal";
    case Experiment::sizebias:
      return "sizebias";
    case Experiment::perpetuity:
      return "perpetuity";
    case Experiment::walk:
      return "walk";
    case Experiment::moments:
      return "moments";
    case Experiment::regvar_check:
      return "regvar-check";
  }
  return "?";
}

const std::vector<Experiment>& all_experiments() {
  static const std::vector<Experiment> v{Experiment::martingale, Experiment::series,  Experiment::renewal,
                                         Experiment::sizebias,   Experiment::perpetuity, Experiment::walk,
                                         Experiment::moments,    Experiment::regvar_check};
  return v;
}

Experiment parse_experiment(std::string_view name) {
  for (auto e : all_experiments())
    if (to_string(e) == name) return e;
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

Scenario parse_scenario(std::string_view text, std::string_view origin) {
  Source src{text, std::string(origin)};
  json root;
  try {
    root = json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    std::size_t line = 1 + static_cast<std::size_t>(std::count(
                               text.begin(), text.begin() + static_cast<std::ptrdiff_t>(std::min(e.byte, text.size())), '\n'));
    std::string what = e.what();
    auto cut = what.find("parse error");
    throw ConfigError(src.origin + ":" + std::to_string(line) + ": " + (cut == std::string::npos ? what : what.substr(cut)));
  }
  Node n(root, {}, src);
  n.allow({"name", "description", "experiment", "seed", "replicas", "model", "perpetuity", "walk", "functions",
           "params", "tolerances"});
  Scenario s;
  s.name = n.child("name").str();
  if (s.name.empty() || s.name.find_first_not_of("abcdefghijklmnopqrstuvwxyz0123456789_-") != std::string::npos)
    n.child("name").fail("must be non-empty with characters [a-z0-9_-]");
  if (n.has("description")) s.description = n.child("description").str();
  {
    Node e = n.child("experiment");
    auto name = e.str();
    s.experiment = guarded(e, [&] { return parse_experiment(name); });
  }
  s.seed = n.uint("seed", s.seed);
  s.replicas = n.uint("replicas", s.replicas);
  if (s.replicas < 1) n.child("replicas").fail("must be >= 1");

  if (n.has("model")) {
    Node m = n.child("model");
    m.allow({"gamma", "offspring", "displacement", "coupling", "cap", "non_arithmetic"});
    BranchingModel model;
    model.gamma = m.num("gamma", 1.0);
    model.offspring = parse_offspring(m.child("offspring"));
    model.displacement = m.has("displacement") ? parse_displacement(m.child("displacement")) : NoDisplacement{};
    std::string coupling = m.has("coupling") ? m.child("coupling").str() : "independent";
    if (coupling == "independent")
      model.coupling = Coupling::independent;
    else if (coupling == "fanout")
      model.coupling = Coupling::deterministic_fanout;
    else
      m.child("coupling").fail("expected 'independent' or 'fanout'");
    s.sim.cap = m.num("cap", s.sim.cap);
    if (!(s.sim.cap >= 1.0)) m.child("cap").fail("must be >= 1");
    if (m.has("non_arithmetic")) s.non_arithmetic = m.child("non_arithmetic").boolean();
    guarded(m, [&] {
      validate(model, false);
      return 0;
    });
    s.model = model;
  }
  if (n.has("perpetuity")) {
    Node p = n.child("perpetuity");
    p.allow({"m", "q"});
    PerpetuitySpec spec{parse_m(p.child("m")), parse_q(p.child("q"))};
    guarded(p, [&] {
      validate(spec);
      return 0;
    });
    s.perpetuity = spec;
  }
  if (n.has("walk")) {
    Node w = n.child("walk");
    w.allow({"step", "cdf", "mc_replicas"});
    WalkSpec walk;
    walk.step = parse_step(w.child("step"));
    std::string cdf = w.has("cdf") ? w.child("cdf").str() : "exact";
    if (cdf == "exact")
      walk.cdf_mode = CdfMode::exact;
    else if (cdf == "monte_carlo")
      walk.cdf_mode = CdfMode::monte_carlo;
    else
      w.child("cdf").fail("expected 'exact' or 'monte_carlo'");
    walk.mc_replicas = w.uint("mc_replicas", walk.mc_replicas);
    walk.seed = s.seed;
    guarded(w, [&] {
      validate(walk);
      return 0;
    });
    s.walk = walk;
  }
  if (n.has("functions")) {
    Node f = n.child("functions");
    f.allow({"a", "b"});
    if (f.has("a")) s.a = parse_function(f.child("a"), Role::a);
    if (f.has("b")) s.b = parse_function(f.child("b"), Role::b);
  }
  if (n.has("params")) parse_params(n.child("params"), s.params);
  if (n.has("tolerances")) parse_tolerances(n.child("tolerances"), s.tol);
  // Index-0 a on a Galton-Watson model needs a non-decreasing slowly varying part.
  if (s.a && s.model && galton_watson(*s.model) && s.a->exponent() == 0.0 && !s.a->slowly_varying().non_decreasing())
    n.child("functions").child("a").fail("a of index 0 must be non-decreasing");
  guarded(n, [&] {
    check_runnable(s, s.experiment);
    return 0;
  });
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

void check_runnable(const Scenario& s, Experiment e) {
  auto need = [&](bool ok, const char* what) {
    if (!ok) throw ConfigError("experiment " + std::string(to_string(e)) + " needs " + what);
  };
  switch (e) {
    case Experiment::martingale:
    case Experiment::sizebias:
      need(s.model.has_value(), "a model block");
      break;
    case Experiment::series:
      need(s.model.has_value(), "a model block");
      need(s.a.has_value(), "functions.a");
      break;
    case Experiment::renewal:
      need(s.model.has_value(), "a model block");
      need(s.b.has_value(), "functions.b");
      break;
    case Experiment::perpetuity:
      need(s.perpetuity.has_value(), "a perpetuity block");
      break;
    case Experiment::walk:
      need(s.walk.has_value(), "a walk block");
      break;
    case Experiment::moments:
      need(s.model.has_value() || s.perpetuity.has_value() || s.walk.has_value(),
           "a model, perpetuity or walk block");
      break;
    case Experiment::regvar_check:
      need(!s.params.families.empty() || s.a || s.b, "params.families or functions");
      break;
  }
}

std::string dump_scenario(const Scenario& s) {
  json j;
  j["name"] = s.name;
  if (!s.description.empty()) j["description"] = s.description;
  j["experiment"] = std::string(to_string(s.experiment));
  j["seed"] = s.seed;
  j["replicas"] = s.replicas;
  if (s.model) {
    json m;
    m["gamma"] = s.model->gamma;
    m["offspring"] = dump(s.model->offspring);
    m["displacement"] = dump(s.model->displacement);
    m["coupling"] = s.model->coupling == Coupling::independent ? "independent" : "fanout";
    m["cap"] = s.sim.cap;
    m["non_arithmetic"] = s.non_arithmetic;
    j["model"] = m;
  }
  if (s.perpetuity) j["perpetuity"] = {{"m", dump(s.perpetuity->m)}, {"q", dump(s.perpetuity->q)}};
  if (s.walk) {
    j["walk"] = {{"step", dump(s.walk->step)},
                 {"cdf", s.walk->cdf_mode == CdfMode::exact ? "exact" : "monte_carlo"},
                 {"mc_replicas", s.walk->mc_replicas}};
  }
  if (s.a || s.b) {
    json f = json::object();
    if (s.a) f["a"] = dump_function(*s.a);
    if (s.b) f["b"] = dump_function(*s.b);
    j["functions"] = f;
  }
  const Params& p = s.params;
  j["params"] = {{"n_max", p.n_max},
                 {"m_max", p.m_max},
                 {"depth", p.depth},
                 {"xs", p.xs},
                 {"identity_n", p.identity_n},
                 {"mu_replicas", p.mu_replicas},
                 {"m", p.m},
                 {"families", p.families},
                 {"log_x_km", p.log_x_km},
                 {"log_x_haan", p.log_x_haan},
                 {"tail_lo", p.tail_lo},
                 {"tail_hi", p.tail_hi},
                 {"ladder_x", p.ladder_x},
                 {"moment_depth", p.moment_depth},
                 {"moment_replicas", p.moment_replicas},
                 {"expect_divergent", p.expect_divergent}};
  const Tolerances& t = s.tol;
  j["tolerances"] = {{"sigma", t.sigma},
                     {"ks", t.ks},
                     {"stabilizing", t.stabilizing},
                     {"relative_floor", t.relative_floor},
                     {"renewal_band", t.renewal_band},
                     {"hat_gap", t.hat_gap},
                     {"km_band", t.km_band},
                     {"haan_band", t.haan_band},
                     {"kappa_band", t.kappa_band},
                     {"karamata_band", t.karamata_band},
                     {"slope", t.slope}};
  return j.dump(2) + "\n";
}

}  // namespace brwlab
