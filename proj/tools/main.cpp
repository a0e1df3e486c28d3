#include "config.hpp"
#include "runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

enum Exit { kOk = 0, kCheckFailed = 1, kConfigError = 2, kRuntimeError = 3 };

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

} // namespace

int main(int argc, char** argv) {
  using namespace robarb;
  CLI::App app{"robarb: robust relative arbitrage solvers and Monte Carlo checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ROBARB_VERSION);

  Flags flags;
  std::string chosen;
  for (const auto& name : cli::experiment_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config,-c", flags.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out,-o", flags.out, "output directory (overrides `output`)");
    sub->add_option("--seed", flags.seed, "64-bit seed (overrides `seed`)");
    sub->add_option("--threads,-j", flags.threads, "worker threads (speed only)")->check(CLI::PositiveNumber);
    sub->callback([&chosen, name] { chosen = name; });
  }
  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = cli::load_config(flags.config, cli::experiment_from_string(chosen));
    if (!flags.out.empty()) cfg.output = flags.out;
    if (flags.seed) cfg.seed = flags.seed;
    if (flags.threads) {
      cfg.threads = *flags.threads;
      cfg.solver.threads = cfg.sim.threads = cfg.oracle.threads = *flags.threads;
    }
    const auto outcome = cli::run(cfg);
    for (const auto& c : outcome.checks) {
      std::printf("[%s] %s%s: value %.6g, reference %.6g, tolerance %.3g%s%s\n", c.pass ? "PASS" : "FAIL",
                  c.name.c_str(), c.acceptance ? "" : " (info)", c.value, c.reference, c.tolerance,
                  c.detail.empty() ? "" : "; ", c.detail.c_str());
    }
    std::printf("artifacts: %s\n", outcome.directory.string().c_str());
    return outcome.pass() ? kOk : kCheckFailed;
  } catch (const cli::ConfigError& e) {
    std::cerr << "robarb: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "robarb: " << e.context() << ": " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "robarb: " << e.what() << '\n';
    return kRuntimeError;
  }
}
