#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chainlab/dynamics.hpp"
#include "chainlab/lattice.hpp"
#include "chainlab/polynomial.hpp"
#include "json.hpp"

namespace chainlab {

enum class OutputFormat { Csv, Json };

struct ExpansionConfig {
  std::vector<long> x{0};
  int n = 1;
  // Also build f^(i), i <= min(n+1, 3), through the explicit sum and compare.
  bool explicit_check = false;
};

struct ResonanceConfig {
  int n = 1;
  double delta = 0.05;
  Interval window{-50, 50};
};

struct TailConfig {
  int n = 1;
  double delta = 0.05;
  std::vector<long> lengths{1, 2, 3, 4, 5, 6};
};

struct McConfig {
  Monomial pattern{{0, 1}, {1, -1}};
  std::vector<double> delta_grid{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
  long samples = 100000;
  std::optional<TailConfig> tail;
};

struct ScheduleConfig {
  std::vector<double> eps{std::exp(-8.0)};
  std::vector<double> t{std::exp(16.0)};
  double c1 = 1.0;
};

// One JSON file with a section per concern. Every key is optional and falls
// back to the defaults below; unknown keys are rejected.
struct RunConfig {
  ModelSpec model;
  InitialCondition initial;
  // Defaults come from IntegratorSpec::defaults(model.kind).
  IntegratorSpec integrator;
  double horizon = 1000.0;
  SamplingGrid sampling;
  std::vector<std::uint64_t> ensemble_seeds{1};
  std::string out_dir = "out";
  OutputFormat format = OutputFormat::Csv;
  int workers = 0;
  ExpansionConfig expansion;
  ResonanceConfig resonance;
  McConfig mc;
  ScheduleConfig schedule;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Throws ConfigError for malformed input, unknown keys or bad values.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// Resolved form; `command` selects the sections written ("" writes all).
// parse_config(to_json(c, cmd)) reproduces c for that command.
nlohmann::json to_json(const RunConfig& c, const std::string& command = "");

// "1,2,3" -> {1, 2, 3}; throws ConfigError on anything else.
std::vector<std::uint64_t> parse_seed_list(const std::string& s);

std::string to_string(OutputFormat f);
OutputFormat format_from_string(const std::string& s);

}  // namespace chainlab
