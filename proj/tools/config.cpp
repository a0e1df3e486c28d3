#include "config.hpp"

#include "robarb/volstab.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace robarb::cli {

ConfigError::ConfigError(std::string key, const std::string& what) : Error("config", key + ": " + what), key_(std::move(key)) {}

namespace {

const std::vector<std::pair<Experiment, std::string>> kNames = {
    {Experiment::SolveHjb, "solve-hjb"},     {Experiment::SolveLinear, "solve-linear"},
    {Experiment::SolvePucci, "solve-pucci"}, {Experiment::Containment, "containment"},
    {Experiment::Oracle, "oracle"},          {Experiment::Backtest, "backtest"},
    {Experiment::Game, "game"},              {Experiment::CheckSets, "check-sets"},
    {Experiment::FullPipeline, "full-pipeline"}};

std::string type_name(const json& j) { return j.type_name(); }

// A JSON object with a dotted path and a closed key set.
class Section {
public:
  Section(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object, got " + type_name(j_));
    for (const auto& [k, v] : j_.items()) {
      if (!allowed.count(k)) throw ConfigError(key(k), "unknown key");
    }
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  bool has(const std::string& k) const { return j_.contains(k); }
  const json& raw(const std::string& k) const { return j_.at(k); }

  double number(const std::string& k, double def) const {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_number()) throw ConfigError(key(k), "expected a number, got " + type_name(v));
    return v.get<double>();
  }
  double positive(const std::string& k, double def) const {
    const double v = number(k, def);
    if (!(v > 0.0)) throw ConfigError(key(k), "must be positive");
    return v;
  }
  long integer(const std::string& k, long def, long min = 0) const {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_number_integer()) throw ConfigError(key(k), "expected an integer, got " + type_name(v));
    const long x = v.get<long>();
    if (x < min) throw ConfigError(key(k), "must be >= " + std::to_string(min));
    return x;
  }
  std::string string(const std::string& k, const std::string& def) const {
    if (!has(k)) return def;
    const auto& v = j_.at(k);
    if (!v.is_string()) throw ConfigError(key(k), "expected a string, got " + type_name(v));
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& k) const {
    const auto& v = j_.at(k);
    if (!v.is_array()) throw ConfigError(key(k), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(key(k), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  Vec vec(const std::string& k) const {
    const auto v = numbers(k);
    if (v.size() < 2 || v.size() > static_cast<std::size_t>(kMaxAssets))
      throw ConfigError(key(k), "length must be between 2 and " + std::to_string(kMaxAssets));
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

private:
  const json& j_;
  std::string path_;
};

template <class F> auto wrap(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(key, e.what());
  }
}

void dimension_match(const std::string& a, int na, const std::string& b, int nb) {
  if (na != nb)
    throw ConfigError(a, "value " + std::to_string(na) + " disagrees with " + b + " = " + std::to_string(nb));
}

std::shared_ptr<const UncertaintySetFamily> parse_family(const Section& s, int n) {
  const std::string type = s.string("type", "volstab");
  const double gc = s.positive("growth_constant", 6.0);
  return wrap(s.key("type"), [&]() -> std::shared_ptr<const UncertaintySetFamily> {
    if (type == "volstab") {
      return volstab_family(n, s.number("delta", 0.0), s.number("c1", 1.0), s.number("c2", 2.0), gc);
    }
    if (type == "diagonal_interval") {
      DiagonalInterval d;
      if (!s.has("lower") || !s.has("upper")) throw ConfigError(s.key("lower"), "diagonal_interval needs lower and upper");
      d.lower = s.vec("lower");
      d.upper = s.vec("upper");
      dimension_match(s.key("lower"), static_cast<int>(d.lower.size()), s.key("dimension"), n);
      dimension_match(s.key("upper"), static_cast<int>(d.upper.size()), s.key("dimension"), n);
      d.c1 = s.number("c1", 1.0);
      d.c2 = s.number("c2", 2.0);
      return std::make_shared<const UncertaintySetFamily>(n, d, gc);
    }
    if (type == "finite_list") {
      FiniteList fl;
      if (!s.has("generators") || !s.raw("generators").is_array() || s.raw("generators").empty())
        throw ConfigError(s.key("generators"), "finite_list needs a nonempty array of generators");
      std::size_t k = 0;
      for (const auto& g : s.raw("generators")) {
        const Section gs(g, s.key("generators") + "[" + std::to_string(k++) + "]", {"theta", "a"});
        Candidate c;
        c.theta = gs.has("theta") ? gs.vec("theta") : Vec::Zero(n);
        dimension_match(gs.key("theta"), static_cast<int>(c.theta.size()), s.key("dimension"), n);
        const auto& rows = gs.raw("a");
        if (!rows.is_array() || rows.size() != static_cast<std::size_t>(n))
          throw ConfigError(gs.key("a"), "expected an n x n array");
        c.a.resize(n, n);
        for (int i = 0; i < n; ++i) {
          if (!rows[i].is_array() || rows[i].size() != static_cast<std::size_t>(n))
            throw ConfigError(gs.key("a"), "expected an n x n array");
          for (int j = 0; j < n; ++j) c.a(i, j) = rows[i][j].get<double>();
        }
        fl.constant.push_back(std::move(c));
      }
      return std::make_shared<const UncertaintySetFamily>(n, fl, gc);
    }
    throw ConfigError(s.key("type"), "unknown family type '" + type + "'");
  });
}

GridSpec parse_grid(const Section& s, int n) {
  GridSpec g;
  const double horizon = s.positive("horizon", 1.0);
  const long steps = s.integer("time_steps", 0);
  if (s.has("lower") || s.has("upper")) {
    g.dimension = n;
    g.lower = s.numbers("lower");
    g.upper = s.numbers("upper");
    dimension_match(s.key("lower"), static_cast<int>(g.lower.size()), s.key("dimension"), n);
    dimension_match(s.key("upper"), static_cast<int>(g.upper.size()), s.key("dimension"), n);
    if (s.has("nodes") && s.raw("nodes").is_array()) {
      for (const auto& v : s.raw("nodes")) g.nodes.push_back(v.get<int>());
      dimension_match(s.key("nodes"), static_cast<int>(g.nodes.size()), s.key("dimension"), n);
    } else {
      g.nodes.assign(static_cast<std::size_t>(n), static_cast<int>(s.integer("nodes", 65, 1)));
    }
    g.horizon = horizon;
    g.time_steps = steps;
  } else {
    g = GridSpec::cube(n, s.positive("half_width", 3.0), static_cast<int>(s.integer("nodes", 65, 1)), horizon, steps);
  }
  // n > 3 is only usable by the Monte Carlo experiments
  if (n <= 3) {
    wrap(s.key("nodes"), [&] {
      g.validate();
      return 0;
    });
  }
  return g;
}

ModelEntry parse_model(const Section& s) {
  ModelEntry m;
  m.type = s.string("type", "least_favorable");
  static const std::set<std::string> types = {"least_favorable", "perturbed", "auxiliary", "frozen"};
  if (!types.count(m.type)) throw ConfigError(s.key("type"), "unknown model type '" + m.type + "'");
  m.eta = s.positive("eta", 1.0);
  m.eta_slope = s.number("eta_slope", 0.0);
  m.zeta = s.positive("zeta", 1.0);
  m.name = s.string("name", "");
  return m;
}

RuleEntry parse_rule(const Section& s, int n) {
  RuleEntry r;
  r.type = s.string("type", "generated");
  if (r.type != "generated" && r.type != "market" && r.type != "constant")
    throw ConfigError(s.key("type"), "unknown rule type '" + r.type + "'");
  if (r.type == "constant") {
    if (!s.has("weights")) throw ConfigError(s.key("weights"), "constant rule needs weights");
    r.weights = s.vec("weights");
    dimension_match(s.key("weights"), static_cast<int>(r.weights.size()), "family.dimension", n);
  }
  r.name = s.string("name", r.type);
  return r;
}

} // namespace

std::string to_string(Experiment e) {
  for (const auto& [k, v] : kNames)
    if (k == e) return v;
  return "?";
}

Experiment experiment_from_string(const std::string& s) {
  for (const auto& [k, v] : kNames)
    if (v == s) return k;
  throw ConfigError("kind", "unknown experiment '" + s + "'");
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& kv : kNames) v.push_back(kv.second);
    return v;
  }();
  return names;
}

bool is_stochastic(Experiment e) {
  switch (e) {
  case Experiment::SolveHjb:
  case Experiment::SolveLinear:
  case Experiment::SolvePucci:
  case Experiment::CheckSets: return false;
  default: return true;
  }
}

RunConfig parse_config(const json& doc, std::optional<Experiment> kind_override) {
  const Section root(doc, "", {"kind", "seed", "output", "threads", "family", "scan", "grid", "solver", "sim", "x0",
                               "containment", "oracle", "models", "rules", "check_sets", "checks"});
  RunConfig c;
  c.source = doc;
  if (kind_override) {
    c.kind = *kind_override;
  } else {
    if (!root.has("kind")) throw ConfigError("kind", "missing (or pass a subcommand)");
    c.kind = experiment_from_string(root.string("kind", ""));
  }
  if (root.has("seed")) {
    const auto& s = root.raw("seed");
    if (!s.is_number_unsigned()) throw ConfigError("seed", "expected a nonnegative integer");
    c.seed = s.get<std::uint64_t>();
  }
  c.output = root.string("output", c.output);
  c.threads = static_cast<int>(root.integer("threads", 1, 1));

  // Dimensions: family.dimension, grid.dimension and x0 must agree.
  const json empty = json::object();
  const Section fam(root.has("family") ? root.raw("family") : empty, "family",
                    {"type", "dimension", "delta", "c1", "c2", "growth_constant", "lower", "upper", "generators"});
  const Section grid(root.has("grid") ? root.raw("grid") : empty, "grid",
                     {"dimension", "half_width", "nodes", "lower", "upper", "horizon", "time_steps"});
  int n = 2;
  if (fam.has("dimension")) n = static_cast<int>(fam.integer("dimension", 2, 2));
  else if (grid.has("dimension")) n = static_cast<int>(grid.integer("dimension", 2, 2));
  if (fam.has("dimension") && grid.has("dimension"))
    dimension_match("grid.dimension", static_cast<int>(grid.integer("dimension", 2, 2)), "family.dimension", n);
  if (n > kMaxAssets) throw ConfigError("family.dimension", "at most " + std::to_string(kMaxAssets) + " assets");

  c.family_json = root.has("family") ? root.raw("family") : json{{"type", "volstab"}};
  c.family = parse_family(fam, n);
  c.grid = parse_grid(grid, n);
  const bool grid_kind = c.kind != Experiment::Oracle && c.kind != Experiment::Containment && c.kind != Experiment::CheckSets;
  if (n > 3 && grid_kind) throw ConfigError("family.dimension", "grid experiments support 2 or 3 assets");

  const Section scan(root.has("scan") ? root.raw("scan") : empty, "scan", {"eta_samples", "zeta_samples"});
  c.scan.eta_samples = static_cast<int>(scan.integer("eta_samples", 2, 1));
  c.scan.zeta_samples = static_cast<int>(scan.integer("zeta_samples", 2, 1));

  const Section sol(root.has("solver") ? root.raw("solver") : empty, "solver",
                    {"boundary", "floor", "drift", "max_retained", "cfl_safety"});
  c.solver.boundary.mode = wrap("solver.boundary", [&] { return boundary_mode_from_string(sol.string("boundary", "ray")); });
  c.solver.boundary.floor = sol.number("floor", 0.0);
  c.solver.drift = wrap("solver.drift", [&] { return drift_scheme_from_string(sol.string("drift", "hybrid")); });
  c.solver.max_retained = static_cast<int>(sol.integer("max_retained", 64, 2));
  c.solver.cfl_safety = sol.positive("cfl_safety", 0.9);
  c.solver.threads = c.threads;

  const Section sim(root.has("sim") ? root.raw("sim") : empty, "sim",
                    {"paths", "steps", "horizon", "absorb_eps", "scheme", "observe_every"});
  c.sim.paths = sim.integer("paths", 10000, 1);
  c.sim.steps = sim.integer("steps", 1000, 1);
  c.sim.horizon = sim.number("horizon", c.grid.horizon);
  c.sim.absorb_eps = sim.positive("absorb_eps", 1e-6);
  c.sim.scheme = wrap("sim.scheme", [&] { return scheme_from_string(sim.string("scheme", "euler")); });
  c.sim.observe_every = sim.integer("observe_every", 0);
  c.sim.threads = c.threads;
  wrap("sim", [&] {
    c.sim.validate();
    return 0;
  });

  c.x0 = root.has("x0") ? root.vec("x0") : Vec::Ones(n);
  dimension_match("x0", static_cast<int>(c.x0.size()), "family.dimension", n);
  if (!all_positive(c.x0)) throw ConfigError("x0", "entries must be positive");

  const Section cont(root.has("containment") ? root.raw("containment") : empty, "containment", {"horizons"});
  c.horizons = cont.has("horizons") ? cont.numbers("horizons") : std::vector<double>{0.25, 0.5, 0.75, 1.0};
  for (double h : c.horizons)
    if (!(h >= 0.0)) throw ConfigError("containment.horizons", "horizons must be nonnegative");

  const Section orc(root.has("oracle") ? root.raw("oracle") : empty, "oracle",
                    {"paths", "u_step_fraction", "u_step", "pilot_paths"});
  c.oracle_paths = orc.integer("paths", 100000, 1);
  c.oracle.u_step_fraction = orc.positive("u_step_fraction", 1e-3);
  c.oracle.u_step = orc.number("u_step", 0.0);
  c.oracle.pilot_paths = orc.integer("pilot_paths", 1000, 1);
  c.oracle.threads = c.threads;

  if (root.has("models")) {
    const auto& arr = root.raw("models");
    if (!arr.is_array() || arr.empty()) throw ConfigError("models", "expected a nonempty array");
    for (std::size_t k = 0; k < arr.size(); ++k)
      c.models.push_back(parse_model(Section(arr[k], "models[" + std::to_string(k) + "]",
                                             {"type", "eta", "eta_slope", "zeta", "name"})));
  } else {
    c.models.push_back({});
  }
  if (root.has("rules")) {
    const auto& arr = root.raw("rules");
    if (!arr.is_array() || arr.empty()) throw ConfigError("rules", "expected a nonempty array");
    for (std::size_t k = 0; k < arr.size(); ++k)
      c.rules.push_back(parse_rule(Section(arr[k], "rules[" + std::to_string(k) + "]", {"type", "weights", "name"}), n));
  } else {
    c.rules.push_back({"generated", {}, "generated"});
    c.rules.push_back({"market", {}, "market"});
  }

  const Section cs(root.has("check_sets") ? root.raw("check_sets") : empty, "check_sets", {"probes"});
  c.probes = static_cast<int>(cs.integer("probes", 200, 1));

  const Section ck(root.has("checks") ? root.raw("checks") : empty, "checks",
                   {"oracle_rel_tol", "sigmas", "outperform_fraction", "saddle_value", "saddle_column", "saddle_row",
                    "pdi_tol", "pdi_skip_below"});
  c.checks.oracle_rel_tol = ck.positive("oracle_rel_tol", c.checks.oracle_rel_tol);
  c.checks.sigmas = ck.positive("sigmas", c.checks.sigmas);
  c.checks.outperform_fraction = ck.number("outperform_fraction", c.checks.outperform_fraction);
  c.checks.saddle.value = ck.positive("saddle_value", c.checks.saddle.value);
  c.checks.saddle.column = ck.positive("saddle_column", c.checks.saddle.column);
  c.checks.saddle.row = ck.positive("saddle_row", c.checks.saddle.row);
  c.checks.pdi_tol = ck.positive("pdi_tol", c.checks.pdi_tol);
  c.checks.pdi_skip_below = ck.number("pdi_skip_below", c.checks.pdi_skip_below);

  const bool needs_volstab = c.kind == Experiment::Oracle || c.kind == Experiment::FullPipeline ||
                             std::any_of(c.models.begin(), c.models.end(), [](const ModelEntry& m) { return m.type != "frozen"; });
  if (needs_volstab && is_stochastic(c.kind) && c.family->kind_name() != "volstab_band")
    throw ConfigError("family.type", "stochastic experiments simulate volstab models and need family.type = volstab");
  return c;
}

RunConfig load_config(const std::string& path, std::optional<Experiment> kind_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("parse error: ") + e.what());
  }
  return parse_config(doc, kind_override);
}

MarketModelSpec make_model(const ModelEntry& m, int n, std::shared_ptr<const UncertaintySetFamily> family) {
  MarketModelSpec spec;
  if (m.type == "least_favorable") spec = least_favorable_model(n, family);
  else if (m.type == "auxiliary") spec = auxiliary_model(n, m.eta, family);
  else if (m.type == "frozen") spec = frozen_model(n);
  else if (m.eta_slope != 0.0) {
    const double eta = m.eta, slope = m.eta_slope;
    spec = perturbed_model(
        n, [eta, slope](double, const Vec& z) { return eta + slope * z[0] / z.sum(); },
        "eta=" + format_double(eta) + "+" + format_double(slope) + "*mu1", m.zeta, family);
  } else {
    spec = perturbed_model(n, m.eta, m.zeta, family);
  }
  if (!m.name.empty()) spec.name = m.name;
  return spec;
}

} // namespace robarb::cli
