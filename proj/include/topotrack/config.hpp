#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Run configuration: JSON file with CLI-flag overrides layered on top.
// Defaults follow the documented protocol (d1 = 504, d2 = 21, d = 3, tau = 1,
// T~ = 42, h = 21, p = 1, k_max = 1).

namespace topotrack::config {

struct RunConfig {
  std::string data_path;
  std::string index_ticker = "INDEX";
  std::string date_from;  // inclusive ISO-8601 bounds; empty = open
  std::string date_to;
  std::string delimiter = ",";

  std::size_t in_sample_days = 504;   // d1
  std::size_t out_sample_days = 21;   // d2 (and the window shift)

  int embed_dimension = 3;  // d
  int embed_delay = 1;      // tau

  int sub_series_months = 6;  // M
  int sub_series_days = 42;   // T~
  int sub_series_step = 21;   // h

  double norm_p = 1.0;
  int norm_k_max = 1;

  std::vector<std::string> models{"TE",         "TDAEN11", "TDAEN12", "VolEN",
                                  "AdaptiveEN", "TDA_L1",  "Vol_L1",  "SLOPE"};
  double var_alpha = 0.95;
  std::vector<double> tuning_levels{1e-4, 1e-3, 1e-2, 0.1, 0.3, 1.0};

  std::string out_dir = "out";
  std::uint64_t seed = 42;
  bool retune_per_window = false;
  bool warm_start = true;
  bool skip_failed_windows = false;  // drop failed windows instead of aborting

  std::size_t synth_assets = 50;
  std::size_t synth_true_assets = 5;
  std::size_t synth_days = 1500;
  double synth_noise = 1e-3;

  void validate() const;
};

/// Parse a JSON config file. Unknown keys are rejected to catch typos.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& origin = "<memory>");
std::string serialize_config(const RunConfig& config);
void save_config(const RunConfig& config, const std::string& path);

}  // namespace topotrack::config
