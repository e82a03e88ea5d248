#pragma once

// Experiment runner behind the command-line tool: flat key-value configs,
// per-experiment parameter tables, and machine-readable run reports.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace rwlab::cli {

/// Bad config file, unknown key, missing seed or malformed value (exit 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentInfo {
  std::string name;
  std::string reference;  // the lemma or theorem exercised
  std::string summary;
};

/// Stable ordering; one row per subcommand.
const std::vector<ExperimentInfo>& list_experiments();
std::string format_experiment_table();
bool is_experiment(const std::string& name);

struct ParamDef {
  std::string key;
  std::string default_value;  // empty when there is no default
  std::string help;
};

/// Keys accepted by an experiment, common keys (seed, out, workers) first.
std::vector<ParamDef> experiment_params(const std::string& name);

using KeyValues = std::map<std::string, std::string>;

/// `key = value` lines, `#` comments, optional `[section]` headers that
/// prefix keys as `section.key`; values may be double-quoted.
KeyValues parse_config_text(const std::string& text);
KeyValues load_config_file(const std::string& path);

/// Resolved configuration: defaults, then the file, then overrides.
class Config {
 public:
  Config(std::string experiment, KeyValues values);

  const std::string& experiment() const { return experiment_; }
  const KeyValues& values() const { return values_; }

  std::string get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::uint64_t get_seed() const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<int> get_ints(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;

 private:
  std::string experiment_;
  KeyValues values_;
};

/// Throws ConfigError for unknown experiments, unknown keys or a missing seed.
Config resolve_config(const std::string& experiment, const KeyValues& file, const KeyValues& overrides);

struct Assertion {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string comparison;  // "<", "<=", ">", ">=", "=="
  bool pass = false;
};

struct RunReport {
  std::string experiment;
  KeyValues params;
  std::vector<Assertion> assertions;
  std::vector<std::string> artifacts;
  nlohmann::json values = nlohmann::json::object();
  double wall_time = 0.0;

  bool all_pass() const;
  nlohmann::json to_json() const;
};

/// Runs the experiment, writing report.json, manifest.toml and CSVs to the
/// configured output directory.
RunReport run_experiment(const Config& cfg);

/// 0 when every assertion passes, 1 otherwise.
int exit_code_for(const RunReport& report);

/// Fixed 17-significant-digit formatting used in every CSV.
std::string format_number(double v);

/// Text table of assertions for the terminal.
std::string format_summary(const RunReport& report);

}  // namespace rwlab::cli
