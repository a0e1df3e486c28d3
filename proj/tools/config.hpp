#pragma once

#include "robarb/error.hpp"
#include "robarb/hjb.hpp"
#include "robarb/portfolio.hpp"
#include "robarb/sde.hpp"
#include "robarb/serialize.hpp"
#include "robarb/uncertainty.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace robarb::cli {

// Schema violations; `key()` is the dotted path of the offending entry.
class ConfigError : public Error {
public:
  ConfigError(std::string key, const std::string& what);
  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

enum class Experiment { SolveHjb, SolveLinear, SolvePucci, Containment, Oracle, Backtest, Game, CheckSets, FullPipeline };

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);
bool is_stochastic(Experiment e);
const std::vector<std::string>& experiment_names();

struct ModelEntry {
  std::string type = "least_favorable"; // least_favorable | perturbed | auxiliary | frozen
  double eta = 1.0;
  double eta_slope = 0.0; // eta(z) = eta + eta_slope * mu_1(z)
  double zeta = 1.0;
  std::string name;
};

struct RuleEntry {
  std::string type = "generated"; // generated | market | constant
  Vec weights;
  std::string name;
};

struct Checks {
  double oracle_rel_tol = 0.02;
  double sigmas = 3.0;
  double outperform_fraction = 0.99;
  SaddleTolerances saddle;
  double pdi_tol = 1e-2;
  double pdi_skip_below = 0.05;
};

struct RunConfig {
  Experiment kind = Experiment::SolveLinear;
  std::optional<std::uint64_t> seed;
  std::string output = "robarb_out";
  int threads = 1;

  json family_json;
  std::shared_ptr<const UncertaintySetFamily> family;
  CandidateScan scan;
  GridSpec grid;
  SolverOptions solver;
  SimConfig sim;
  Vec x0;
  std::vector<double> horizons; // containment curve
  OracleOptions oracle;
  long oracle_paths = 100000;
  std::vector<ModelEntry> models;
  std::vector<RuleEntry> rules;
  int probes = 200;
  Checks checks;

  json source; // config echo
};

// Parses and validates a config document. `kind_override` replaces the
// document's "kind" (the CLI subcommand).
RunConfig parse_config(const json& doc, std::optional<Experiment> kind_override = std::nullopt);
RunConfig load_config(const std::string& path, std::optional<Experiment> kind_override = std::nullopt);

MarketModelSpec make_model(const ModelEntry& m, int n, std::shared_ptr<const UncertaintySetFamily> family);

} // namespace robarb::cli
