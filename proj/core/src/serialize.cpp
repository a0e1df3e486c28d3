#include "robarb/serialize.hpp"

#include "robarb/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace robarb {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc()) throw InvalidArgument("csv", "cannot parse number '" + s + "'");
  return v;
}

// JSON has no NaN/inf; encode them as strings.
json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

} // namespace

json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

Vec vec_from_json(const json& j) {
  if (!j.is_array()) throw InvalidArgument("json", "expected an array of numbers");
  if (j.size() > static_cast<std::size_t>(kMaxAssets)) throw InvalidArgument("json", "vector too long");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

json to_json(const GridSpec& g) {
  return {{"dimension", g.dimension}, {"lower", g.lower},          {"upper", g.upper},
          {"nodes", g.nodes},         {"horizon", g.horizon},      {"time_steps", g.time_steps}};
}

GridSpec grid_spec_from_json(const json& j) {
  GridSpec g;
  g.dimension = j.at("dimension").get<int>();
  g.lower = j.at("lower").get<std::vector<double>>();
  g.upper = j.at("upper").get<std::vector<double>>();
  g.nodes = j.at("nodes").get<std::vector<int>>();
  g.horizon = j.at("horizon").get<double>();
  g.time_steps = j.value("time_steps", 0L);
  return g;
}

json to_json(const SimConfig& c) {
  return {{"horizon", c.horizon},       {"steps", c.steps},
          {"paths", c.paths},           {"seed", c.seed},
          {"absorb_eps", c.absorb_eps}, {"scheme", to_string(c.scheme)},
          {"observe_every", c.observation_stride()}};
}

json to_json(const SolverStats& s) {
  return {{"steps", s.steps},
          {"required_steps", s.required_steps},
          {"dtau", s.dtau},
          {"max_rate", s.max_rate},
          {"cfl_number", s.cfl_number},
          {"negative_weights", s.negative_weights},
          {"candidates", s.candidates},
          {"boundary", s.boundary}};
}

json to_json(const ConditionReport& r) {
  json a = json::array();
  for (const auto& e : r.entries) {
    a.push_back({{"name", e.name}, {"worst", num(e.worst)}, {"threshold", e.threshold},
                 {"witness", to_json(e.witness)}, {"pass", e.pass}});
  }
  return {{"conditions", a}, {"all_pass", r.all_pass()}};
}

json to_json(const SufficiencyResult& r) {
  return {{"weight_gap_inf", num(r.weight_gap_inf)},
          {"weight_gap_witness", to_json(r.weight_gap_witness)},
          {"weight_gap_zeta", r.weight_gap_zeta ? json(*r.weight_gap_zeta) : json(nullptr)},
          {"diversity_inf", num(r.diversity_inf)},
          {"diversity_witness", to_json(r.diversity_witness)},
          {"diversity_zeta", r.diversity_zeta ? json(*r.diversity_zeta) : json(nullptr)}};
}

json to_json(const PolicyField& p) {
  json frac = json::array();
  for (std::size_t c = 0; c < p.selections.size(); ++c) frac.push_back(p.fraction_selecting(static_cast<int>(c)));
  return {{"retained", p.tau.size()}, {"selections", p.selections}, {"interior_pairs", p.interior_pairs},
          {"fractions", frac}};
}

json to_json(const ResidualReport& r) {
  return {{"pairs", r.tau_mid.size()},         {"min_residual", num(r.min_residual)},
          {"max_abs_residual", num(r.max_abs_residual)}, {"witness_z", to_json(r.witness_z)},
          {"witness_tau", r.witness_tau},          {"tolerance", r.tolerance},
          {"pass", r.pass}};
}

json to_json(const ContainmentEstimate& e) {
  return {{"q_hat", e.q_hat}, {"stderr", e.std_error}, {"paths", e.paths}, {"absorbed", e.absorbed}};
}

json to_json(const TrendReport& r) {
  return {{"kind", r.kind == TrendKind::Constant ? "constant" : "nonincreasing"},
          {"times", r.times},
          {"means", nums(r.means)},
          {"stderrs", nums(r.stderrs)},
          {"counts", r.counts},
          {"witness_times", r.witness_times},
          {"clamped", r.clamped},
          {"absorbed", r.absorbed},
          {"sigmas", r.sigmas},
          {"pass", r.pass}};
}

json to_json(const WealthLedger& l) {
  return {{"rule", l.rule_name},
          {"model", l.model_name},
          {"v0", l.v0},
          {"config", to_json(l.config)},
          {"paths", l.terminal_ratio.size()},
          {"outperform_fraction", l.outperform_fraction()},
          {"interim_fraction", l.interim_fraction()},
          {"interim_pairs", l.interim_pairs},
          {"surplus_decreases", l.surplus_decreases},
          {"ruined", l.ruined},
          {"clamped", l.clamped},
          {"absorbed", l.absorbed}};
}

json to_json(const GameValue& g) {
  return {{"xi_hat", num(g.xi_hat)}, {"p50", num(g.p50)},   {"p99", num(g.p99)}, {"p999", num(g.p999)},
          {"mean", num(g.mean)},     {"ruined", g.ruined}, {"absorbed", g.absorbed}, {"paths", g.paths}};
}

json to_json(const SaddleReport& r) {
  json cells = json::array();
  for (const auto& row : r.cells) {
    json jr = json::array();
    for (const auto& c : row) jr.push_back(to_json(c));
    cells.push_back(jr);
  }
  return {{"rules", r.rules},
          {"models", r.models},
          {"cells", cells},
          {"u_star", r.u_star},
          {"tolerances", {{"value", r.tol.value}, {"column", r.tol.column}, {"row", r.tol.row}}},
          {"value_ok", r.value_ok},
          {"column_ok", r.column_ok},
          {"row_ok", r.row_ok},
          {"witnesses", r.witnesses},
          {"pass", r.pass()}};
}

json to_json(const OracleResult& r) {
  return {{"u_hat", r.u_hat},
          {"stderr", r.std_error},
          {"paths", r.paths},
          {"seed", r.seed},
          {"u_step", r.u_step},
          {"pilot", {{"paths", r.pilot_paths}, {"mean_clock", r.pilot_mean_clock}}},
          {"mean_clock", r.mean_clock},
          {"clock_stderr", r.clock_std_error},
          {"mean_steps", r.mean_steps}};
}

json to_json(const PathBundle& b) {
  std::vector<double> mean_x(static_cast<std::size_t>(b.dimension), 0.0);
  const std::size_t M = b.absorbed_step.size();
  for (std::size_t p = 0; p < M; ++p)
    for (int i = 0; i < b.dimension; ++i) mean_x[static_cast<std::size_t>(i)] += b.terminal_x[p * static_cast<std::size_t>(b.dimension) + static_cast<std::size_t>(i)];
  for (auto& m : mean_x) m /= static_cast<double>(M);
  return {{"model", b.model_name},
          {"mode", to_string(b.mode)},
          {"dimension", b.dimension},
          {"x0", to_json(b.x0)},
          {"config", to_json(b.config)},
          {"observations", b.obs_steps.size()},
          {"absorbed", b.absorbed_count()},
          {"mean_terminal_x", mean_x},
          {"constraint_checks", b.constraint_checks}};
}

void write_json(const std::filesystem::path& file, const json& j) {
  std::ofstream os(file);
  if (!os) throw Error("io", "cannot write " + file.string());
  os << j.dump(2) << '\n';
}

void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  if (!header.empty())
    for (const auto& r : rows)
      if (r.size() != header.size()) throw InvalidArgument("write_csv", "row width differs from header in " + file.string());
  std::ofstream os(file);
  if (!os) throw Error("io", "cannot write " + file.string());
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  if (!header.empty()) os << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_double(r[i]);
    os << '\n';
  }
}

std::filesystem::path write_grid_function(const GridFunction& f, const std::filesystem::path& dir,
                                          const std::string& stem) {
  std::filesystem::create_directories(dir);
  json slices = json::array();
  const int n = f.grid.dimension;
  for (std::size_t k = 0; k < f.slices.size(); ++k) {
    const std::string name = stem + "_slice_" + std::to_string(k) + ".csv";
    std::ofstream os(dir / name);
    if (!os) throw Error("io", "cannot write " + (dir / name).string());
    for (int a = 0; a < n; ++a) os << "i" << a << ",";
    for (int a = 0; a < n; ++a) os << "y" << a << ",";
    os << "value\n";
    int idx[kMaxAssets];
    for (std::size_t p = 0; p < f.slices[k].size(); ++p) {
      f.grid.unflatten(p, idx);
      for (int a = 0; a < n; ++a) os << idx[a] << ",";
      for (int a = 0; a < n; ++a) os << format_double(f.grid.coord(a, idx[a])) << ",";
      os << format_double(f.slices[k][p]) << '\n';
    }
    slices.push_back({{"tau", f.tau[k]}, {"file", name}});
  }
  json header = {{"grid", to_json(f.grid)},
                 {"tag", to_string(f.tag)},
                 {"scale_invariant", f.scale_invariant},
                 {"slices", slices},
                 {"metadata", f.metadata}};
  const auto path = dir / (stem + ".json");
  write_json(path, header);
  return path;
}

GridFunction read_grid_function(const std::filesystem::path& header) {
  std::ifstream is(header);
  if (!is) throw Error("io", "cannot read " + header.string());
  const json h = json::parse(is);
  GridFunction f;
  f.grid = grid_spec_from_json(h.at("grid"));
  f.grid.validate();
  f.tag = quantity_from_string(h.at("tag").get<std::string>());
  f.scale_invariant = h.value("scale_invariant", false);
  f.metadata = h.value("metadata", json::object());
  const auto dir = header.parent_path();
  const std::size_t count = f.grid.node_count();
  for (const auto& s : h.at("slices")) {
    f.tau.push_back(s.at("tau").get<double>());
    std::ifstream cs(dir / s.at("file").get<std::string>());
    if (!cs) throw Error("io", "cannot read slice " + s.at("file").get<std::string>());
    std::string line;
    std::getline(cs, line);
    std::vector<double> v;
    v.reserve(count);
    while (std::getline(cs, line)) {
      if (line.empty()) continue;
      const auto pos = line.rfind(',');
      v.push_back(parse_double(line.substr(pos + 1)));
    }
    if (v.size() != count) throw Error("io", "slice has " + std::to_string(v.size()) + " values, expected " + std::to_string(count));
    f.slices.push_back(std::move(v));
  }
  return f;
}

void write_path_csv(const PathBundle& b, const std::filesystem::path& dir, const std::string& stem) {
  if (b.paths.empty()) throw InvalidArgument("write_path_csv", "bundle was simulated without keep_paths");
  std::filesystem::create_directories(dir);
  std::vector<std::string> header;
  for (double t : b.obs_times) header.push_back("t=" + format_double(t));
  const std::size_t nobs = b.obs_count();
  auto dump = [&](const std::string& q, auto getter) {
    std::vector<std::vector<double>> rows;
    for (std::size_t p = 0; p < b.paths.size(); ++p) {
      std::vector<double> r(nobs);
      for (std::size_t k = 0; k < nobs; ++k) r[k] = getter(p, k);
      rows.push_back(std::move(r));
    }
    write_csv(dir / (stem + "_" + q + ".csv"), header, rows);
  };
  for (int i = 0; i < b.dimension; ++i) {
    dump("x" + std::to_string(i), [&](std::size_t p, std::size_t k) {
      return b.paths[p].x[k * static_cast<std::size_t>(b.dimension) + static_cast<std::size_t>(i)];
    });
    dump("mu" + std::to_string(i), [&](std::size_t p, std::size_t k) { return b.weights(p, k)[i]; });
  }
  dump("deflator", [&](std::size_t p, std::size_t k) { return b.paths[p].deflator[k]; });
  dump("lambda", [&](std::size_t p, std::size_t k) { return b.paths[p].lambda[k]; });
  dump("clock", [&](std::size_t p, std::size_t k) { return b.paths[p].clock[k]; });
}

} // namespace robarb
