// gpct: train, simulate, evaluate, learning-curve and check.
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure,
// 3 divergence.

#include "gpct/harness/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace gpct;

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<long> seed;
  std::optional<int> realizations;
  std::vector<int> sizes;
  std::vector<std::string> files;
  double t_skip = 1.0;
};

harness::Scenario load(const Options& o) {
  harness::Scenario sc = harness::load_scenario(o.config);
  if (o.seed) {
    if (*o.seed < 0) throw ConfigError("--seed must be non-negative");
    harness::apply_seed(sc, static_cast<std::uint64_t>(*o.seed));
  }
  if (o.realizations) harness::apply_realizations(sc, *o.realizations);
  return sc;
}

void add_common(CLI::App* cmd, Options& o, bool needs_config) {
  auto* cfg = cmd->add_option("--config", o.config, "scenario configuration (INI)");
  if (needs_config) cfg->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", o.seed, "base seed (overrides [scenario] seed)");
  cmd->add_option("--realizations", o.realizations, "number of simulation runs (overrides [sim] realizations)");
}

int run(int argc, char** argv) {
  CLI::App app{"GP-enhanced computed-torque control: training, simulation and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("gpct ") + kVersion);
  Options o;

  auto* train = app.add_subcommand("train", "generate the training set and fit GP hyperparameters");
  add_common(train, o, true);
  auto* simulate = app.add_subcommand("simulate", "simulate the configured controllers");
  add_common(simulate, o, true);
  auto* evaluate = app.add_subcommand("evaluate", "RMSE report for trajectory CSV files");
  add_common(evaluate, o, false);
  evaluate->add_option("files", o.files, "trajectory CSV files")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--t-skip", o.t_skip, "start of the evaluation window in seconds")->capture_default_str();
  auto* curve = app.add_subcommand("learning-curve", "CT-GP RMSE over training-set sizes");
  add_common(curve, o, true);
  curve->add_option("--sizes", o.sizes, "training-set sizes (default from [learning_curve] sizes)")->delimiter(',');
  auto* check = app.add_subcommand("check", "structural properties and tracking conditions");
  add_common(check, o, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return harness::kExitConfig;
  }

  try {
    if (*train) return harness::cmd_train(load(o), o.out, std::cout);
    if (*simulate) return harness::cmd_simulate(load(o), o.out, std::cout);
    if (*evaluate) return harness::cmd_evaluate(o.files, o.t_skip, o.out, std::cout);
    if (*curve) {
      const harness::Scenario sc = load(o);
      return harness::cmd_learning_curve(sc, o.out, o.sizes.empty() ? sc.learning_curve.sizes : o.sizes, std::cout);
    }
    if (*check) return harness::cmd_check(load(o), o.out, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return harness::kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return harness::kExitDivergence;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return harness::kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return harness::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return harness::kExitNumerical;
  }
  return harness::kExitConfig;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
