#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "chainlab/checks.hpp"
#include "chainlab/config.hpp"
#include "chainlab/dynamics.hpp"
#include "json.hpp"

namespace chainlab {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailure = 1,
  kExitConfigError = 2,
  kExitRuntimeFailure = 3,
};

// The config's trajectory with the disorder seed replaced by `seed`.
TrajectoryRecord simulate_seed(const RunConfig& c, std::uint64_t seed);

struct SeedSummary {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  LightConeReport light_cone;
  double min_M = 0.0;
  double min_M_t = 0.0;
  // First sample with t >= 1 and M(t) <= eps(t); none expected at desk scale.
  std::optional<double> first_threshold_crossing;
  // Last such sample: an empirical lower bound on the time after which the
  // threshold holds.
  std::optional<double> last_threshold_crossing;
  double threshold_margin = 0.0;
  double stopping_constant = 0.0;
  double max_energy_drift = 0.0;
  long steps = 0;
  long growth_events = 0;
  std::vector<StoppingTimes> stopping;
};
SeedSummary summarize(const TrajectoryRecord& r, std::uint64_t seed);
nlohmann::json to_json(const SeedSummary& s);

// Each command writes its files and summary.json into c.out_dir. `summary`
// embeds the resolved config; its "config" member parses back to c.
struct CommandOutput {
  int exit_code = kExitOk;
  nlohmann::json summary;
};

CommandOutput cmd_simulate(const RunConfig& c);
CommandOutput cmd_expand(const RunConfig& c);
CommandOutput cmd_resonance(const RunConfig& c);
CommandOutput cmd_mc(const RunConfig& c);
CommandOutput cmd_schedule(const RunConfig& c);
CommandOutput cmd_verify(const RunConfig& c, const VerifyOptions& opts);

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "expand", "resonance",
                                              "mc",       "verify", "schedule"};
  return names;
}

// Dispatches by name; ConfigError maps to exit 2 and any other exception to
// exit 3, with the message written to err.
int run_command(const std::string& name, const RunConfig& c, std::ostream& err);

}  // namespace chainlab
