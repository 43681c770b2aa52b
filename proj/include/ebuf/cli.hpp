#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ebuf/channel.hpp"
#include "ebuf/eh_model.hpp"

namespace ebuf::cli {

// Fully-resolved run description. Powers and energies are linear SI units;
// dBm inputs are converted at parse time and echoed back in linear form.
struct RunConfig {
  std::string scenario = "run";

  // Harvest model: shape m and mean effective harvest per slot (beta already
  // applied, joules). The raw mean is mean_x_eff / imp.beta.
  int m = 1;
  double mean_x_eff = 1.0;
  Imperfections imp;

  std::vector<Policy> policies;
  double delta_eff = 1.2;                        // operating point for dist/outage
  std::vector<std::optional<double>> capacities;  // J; nullopt = infinite

  UplinkChannel ul;
  std::vector<double> rates;  // throughput sweep grid

  double delta_lo = 0.05;
  double delta_hi = 5.0;
  int delta_points = 120;

  std::int64_t slots = 1'000'000;
  std::uint64_t seed = 1;
  int bins = 400;
  bool simulate = true;

  int grid_points = 400;
  std::string out_dir = ".";
  std::string format = "both";  // csv | json | both

  void validate() const;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// The resolved config as echoed into every output file.
nlohmann::json resolved_json(const RunConfig& cfg);

int cmd_dist(const RunConfig& cfg);
int cmd_outage(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);
int cmd_throughput(const RunConfig& cfg);
int cmd_compare(const RunConfig& cfg);

// Dispatch by subcommand name; throws config_error for unknown names.
int run_command(const std::string& name, const RunConfig& cfg);

}  // namespace ebuf::cli
