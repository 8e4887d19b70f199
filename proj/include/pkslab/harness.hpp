#pragma once

// Experiments, their configuration and the reports they produce.
// An experiment composes the library operations, records every comparison
// as a CheckRecord and never lets a library error escape: it becomes a
// failed check instead.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pkslab/fields.hpp"

namespace pkslab {

enum class Experiment {
  profile_suite,
  spectrum_suite,
  self_similarity,
  attractor,
  lipschitz,
  critical_mass,
  sn_suite,
  energy_suite,
};
std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);
const std::vector<Experiment>& all_experiments();

/// Reads a mass given as a number or as a multiple of pi ("4pi", "pi",
/// "0.5*pi", "-2pi").
double parse_mass(const nlohmann::json& j);

struct ExperimentConfig {
  Experiment experiment = Experiment::profile_suite;
  /// Merged over defaults(experiment); unknown keys are rejected.
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string output_dir = "runs";

  static nlohmann::json defaults(Experiment e);
  nlohmann::json resolved_params() const;
  /// Throws InvalidArgument on unknown keys, wrong types or out-of-range values.
  void validate() const;
  /// Canonical form: resolved parameters, always with the seed.
  nlohmann::json to_json() const;
  /// Requires "experiment" and "seed".
  static ExperimentConfig from_json(const nlohmann::json& j);
  /// FNV-1a of the canonical JSON without output_dir, hex.
  std::string hash() const;
};

enum class Comparison {
  abs,       ///< |measured - expected| <= tolerance
  rel,       ///< |measured - expected| <= tolerance |expected|
  at_most,   ///< measured <= expected + tolerance
  at_least,  ///< measured >= expected - tolerance
};
std::string to_string(Comparison c);
Comparison comparison_from_string(const std::string& s);

struct CheckRecord {
  std::string name;
  std::string statement;  ///< what property the check verifies
  double measured = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  Comparison comparison = Comparison::abs;
  bool pass = false;
  std::string error;  ///< kind and message when a module failed

  static CheckRecord make(std::string name, std::string statement, double measured, double expected,
                          double tolerance, Comparison c);
  static CheckRecord failure(std::string name, std::string statement, const std::string& error);
  nlohmann::json to_json() const;
  static CheckRecord from_json(const nlohmann::json& j);
};

/// Tabular output of an experiment, written as CSV and as plot data.
struct Series {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  nlohmann::json to_json() const;
  static Series from_json(const nlohmann::json& j);
};

struct RunReport {
  ExperimentConfig config;
  std::string config_hash;
  std::vector<CheckRecord> checks;
  std::vector<Series> series;
  /// Fields are written under fields/ and only listed by name in the JSON.
  std::vector<std::pair<std::string, Field2D>> fields;
  nlohmann::json environment = nlohmann::json::object();
  std::string started;  ///< UTC, ISO 8601
  double wall_seconds = 0.0;

  bool pass() const;
  const CheckRecord* find(const std::string& name) const;
  /// Everything that must be reproducible: no timestamps, timings or host data.
  nlohmann::json body() const;
  nlohmann::json to_json() const;
  static RunReport from_json(const nlohmann::json& j);
  friend bool operator==(const RunReport& a, const RunReport& b) { return a.to_json() == b.to_json(); }
};

/// Compiler, library versions, host and thread count.
nlohmann::json environment_stamp();

RunReport run_experiment(const ExperimentConfig& cfg);

/// runs/<timestamp>-<hash> under the configured output directory.
std::filesystem::path run_directory(const RunReport& r);
/// Writes report.json, checks.csv, <series>.csv, <series>.dat and
/// fields/<name>.bin into `dir`. Throws IoError naming the path.
void emit_report(const RunReport& r, const std::filesystem::path& dir);
std::filesystem::path emit_report(const RunReport& r);

int exit_status(const RunReport& r);
int exit_status(const std::vector<RunReport>& reports);

/// Expands {"base": config, "grid": {"params.alpha": [...], "seed": [...]}}
/// into the cartesian product; a plain config or an array of configs is
/// passed through.
std::vector<ExperimentConfig> expand_sweep(const nlohmann::json& j);
/// At most `jobs` concurrent runs; the result is ordered by config hash.
std::vector<RunReport> run_sweep(const std::vector<ExperimentConfig>& configs, int jobs);

/// "a.b.c=value": value parsed as JSON when possible, else kept as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);
/// PKSLAB_SEED=3, PKSLAB_PARAMS__GRID=512: prefix stripped, lower-cased,
/// "__" separates levels. Variables are applied in sorted order.
void apply_env_overrides(nlohmann::json& j, char** envp);

}  // namespace pkslab
