#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "chainlab/config.hpp"
#include "chainlab/errors.hpp"
#include "chainlab/harness.hpp"

using namespace chainlab;

int main(int argc, char** argv) {
  CLI::App app{"Disordered anharmonic chains: trajectories, local decompositions, resonances"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path, out_dir, seeds, format;
  std::optional<int> workers;
  app.add_option("--config", config_path, "JSON run config")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seeds", seeds, "comma-separated disorder seeds");
  app.add_option("--workers", workers, "worker threads (0 = logical cores)");
  app.add_option("--format", format, "csv or json");

  app.add_subcommand("simulate", "integrate one trajectory per seed");
  app.add_subcommand("expand", "local decomposition of the energy current");
  app.add_subcommand("resonance", "resonant sites and intervals on a window");
  app.add_subcommand("mc", "small-denominator and interval-tail Monte Carlo");
  app.add_subcommand("verify", "run the invariant suite");
  app.add_subcommand("schedule", "parameter schedule and threshold curve");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig c;
  try {
    // flag > CHAINLAB_SEED > file > default
    c = config_path.empty() ? parse_config(nlohmann::json::object()) : load_config(config_path);
    if (const char* env = std::getenv("CHAINLAB_SEED"); env && *env)
      c.ensemble_seeds = parse_seed_list(env);
    if (!seeds.empty()) c.ensemble_seeds = parse_seed_list(seeds);
    if (!out_dir.empty()) c.out_dir = out_dir;
    if (workers) c.workers = *workers;
    if (!format.empty()) c.format = format_from_string(format);
    c.validate();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return run_command(command, c, std::cerr);
}
