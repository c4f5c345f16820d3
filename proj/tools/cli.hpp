#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "seqnpa/scenarios.hpp"

namespace seqnpa::cli {

// Invalid configuration; maps to exit status 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Scenario { kTradeoff, kDvRandomness, kEveTradeoff, kEveFull, kMembership, kExportSdp };

std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& name);

// Either {start, stop, count} or an explicit list.
struct Grid {
  double start = 0.0;
  double stop = 0.0;
  int count = 0;
  std::vector<double> list;

  bool empty() const { return list.empty() && count == 0; }
  std::vector<double> points() const;
};

struct RunConfig {
  Scenario scenario = Scenario::kTradeoff;
  std::optional<Grid> grid;  // scenario default when absent
  int level = 1;
  scenarios::SetChoice set_choice = scenarios::SetChoice::kS1;
  double tolerance = 1e-8;
  int max_iterations = 200;
  std::string output_path;  // empty: standard output
  std::optional<scenarios::EveTargets> eve_targets;
  std::string distribution;  // membership input; empty: bundled P_obs(0.7)
  bool verbose = false;
};

// Parses one JSON config object. Unknown keys are rejected.
RunConfig parse_config(const nlohmann::json& j);

// "0.5:0.8536:33" or "0.5,0.6,0.7".
Grid parse_grid(const std::string& text);

// Checks ranges and the scenario's documented domain. Throws ConfigError.
void validate(const RunConfig& config);

scenarios::SeqDistribution parse_distribution(const nlohmann::json& j);
scenarios::SeqDistribution bundled_distribution();

// Runs one scenario. Returns 0 when every point reached optimal (or a verdict),
// 1 after writing partial output on solver failure. Diagnostics go to `diag`.
int run(const RunConfig& config, std::ostream& diag);

// Command-line entry: parses flags and the optional --config file, then runs.
// Invalid configuration returns 2.
int main_entry(int argc, char** argv, std::ostream& diag);

// Default grid of each curve scenario.
Grid default_grid(Scenario s);

// Reals with six decimals, "nan" for missing values.
std::string format_real(double v);

}  // namespace seqnpa::cli
