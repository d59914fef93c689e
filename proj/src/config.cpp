#include "topotrack/config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "topotrack/common.hpp"
#include "topotrack/penalty.hpp"

namespace topotrack::config {

namespace {

using nlohmann::json;

template <typename T>
void read(const json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

}  // namespace

void RunConfig::validate() const {
  if (delimiter.size() != 1) throw DataError("delimiter must be a single character");
  if (in_sample_days < 2 || out_sample_days < 1) throw DataError("invalid window plan");
  if (embed_dimension < 2 || embed_delay < 1) throw DataError("invalid embedding");
  if (norm_p < 1.0 || norm_k_max < 1) throw DataError("invalid norm order");
  if (!(var_alpha > 0.0 && var_alpha < 1.0)) throw DataError("VaR alpha must be in (0, 1)");
  if (models.empty()) throw DataError("at least one model kind required");
  for (const auto& m : models) penalty::kind_from_string(m);
  if (tuning_levels.empty()) throw DataError("tuning levels must be nonempty");
  penalty::SubSeriesPlan plan{sub_series_months, sub_series_days, sub_series_step};
  plan.validate();
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(origin + ": " + e.what());
  }
  if (!j.is_object()) throw DataError(origin + ": config must be a JSON object");

  static const std::vector<std::string> known{
      "data_path",       "index_ticker",    "date_from",        "date_to",
      "delimiter",       "in_sample_days",  "out_sample_days",  "embed_dimension",
      "embed_delay",     "sub_series_months", "sub_series_days", "sub_series_step",
      "norm_p",          "norm_k_max",      "models",           "var_alpha",
      "tuning_levels",   "out_dir",         "seed",             "retune_per_window",
      "warm_start",      "skip_failed_windows",      "synth_assets",    "synth_true_assets", "synth_days",
      "synth_noise"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw DataError(origin + ": unknown config key '" + key + "'");

  RunConfig c;
  try {
    read(j, "data_path", c.data_path);
    read(j, "index_ticker", c.index_ticker);
    read(j, "date_from", c.date_from);
    read(j, "date_to", c.date_to);
    read(j, "delimiter", c.delimiter);
    read(j, "in_sample_days", c.in_sample_days);
    read(j, "out_sample_days", c.out_sample_days);
    read(j, "embed_dimension", c.embed_dimension);
    read(j, "embed_delay", c.embed_delay);
    read(j, "sub_series_months", c.sub_series_months);
    read(j, "sub_series_days", c.sub_series_days);
    read(j, "sub_series_step", c.sub_series_step);
    read(j, "norm_p", c.norm_p);
    read(j, "norm_k_max", c.norm_k_max);
    read(j, "models", c.models);
    read(j, "var_alpha", c.var_alpha);
    read(j, "tuning_levels", c.tuning_levels);
    read(j, "out_dir", c.out_dir);
    read(j, "seed", c.seed);
    read(j, "retune_per_window", c.retune_per_window);
    read(j, "warm_start", c.warm_start);
    read(j, "skip_failed_windows", c.skip_failed_windows);
    read(j, "synth_assets", c.synth_assets);
    read(j, "synth_true_assets", c.synth_true_assets);
    read(j, "synth_days", c.synth_days);
    read(j, "synth_noise", c.synth_noise);
  } catch (const json::exception& e) {
    throw DataError(origin + ": " + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path);
}

std::string serialize_config(const RunConfig& c) {
  json j;
  j["data_path"] = c.data_path;
  j["index_ticker"] = c.index_ticker;
  j["date_from"] = c.date_from;
  j["date_to"] = c.date_to;
  j["delimiter"] = c.delimiter;
  j["in_sample_days"] = c.in_sample_days;
  j["out_sample_days"] = c.out_sample_days;
  j["embed_dimension"] = c.embed_dimension;
  j["embed_delay"] = c.embed_delay;
  j["sub_series_months"] = c.sub_series_months;
  j["sub_series_days"] = c.sub_series_days;
  j["sub_series_step"] = c.sub_series_step;
  j["norm_p"] = c.norm_p;
  j["norm_k_max"] = c.norm_k_max;
  j["models"] = c.models;
  j["var_alpha"] = c.var_alpha;
  j["tuning_levels"] = c.tuning_levels;
  j["out_dir"] = c.out_dir;
  j["seed"] = c.seed;
  j["retune_per_window"] = c.retune_per_window;
  j["warm_start"] = c.warm_start;
  j["skip_failed_windows"] = c.skip_failed_windows;
  j["synth_assets"] = c.synth_assets;
  j["synth_true_assets"] = c.synth_true_assets;
  j["synth_days"] = c.synth_days;
  j["synth_noise"] = c.synth_noise;
  return j.dump(2) + "\n";
}

void save_config(const RunConfig& config, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write config file: " + path);
  out << serialize_config(config);
}

}  // namespace topotrack::config
