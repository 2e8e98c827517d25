#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dynwalk/analysis.hpp"
#include "dynwalk/errors.hpp"
#include "dynwalk/graph.hpp"
#include "dynwalk/params.hpp"

namespace dynwalk {

using Json = nlohmann::ordered_json;
using KeyValues = std::map<std::string, std::string>;

/// Grammar: one `key = value` per line; blank lines and lines starting with
/// `#` are ignored; whitespace around key and value is trimmed; duplicate
/// keys are a ParseError.
KeyValues parse_key_values(std::istream& in, const std::string& source = "<config>");
KeyValues load_key_values(const std::string& path);
void write_key_values(const KeyValues& kv, std::ostream& out);

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"stationarity", "mixing_scaling", "cut_fraction", "sparsity",
                                              "lemma_suite",  "walkcounts",     "cycles",       "phase1",
                                              "phase2",       "trajectory"};
  return names;
}

struct ExperimentConfig {
  std::string experiment;
  Params params;
  KeyValues overrides;  // per-experiment knobs
  std::string out_dir;
  int jobs = 1;
};

/// Splits a flat key=value map into params, runner keys (experiment, out_dir,
/// jobs) and overrides. Unknown experiment names are InvalidConfig.
ExperimentConfig experiment_config_from_kv(const KeyValues& kv);
KeyValues experiment_config_to_kv(const ExperimentConfig& config);

struct ResultRecord {
  int schema_version = 1;
  std::string timestamp;
  std::string git_describe;
  KeyValues config;
  Json params;
  Json derived_constants;
  Json metrics = Json::object();
  std::map<std::string, std::string> verdicts;

  Json to_json() const;
  static ResultRecord from_json(const Json& j);
  bool operator==(const ResultRecord&) const = default;
};

/// UTC ISO-8601 time; honours SOURCE_DATE_EPOCH for reproducible output.
std::string result_timestamp();
std::string build_git_describe();

Json params_json(const Params& params);
Json constants_json(const std::optional<DerivedConstants>& constants);
Json estimate_json(const Estimate& est);

/// One estimator summary: {op, params, derived_constants, estimate, ci, bound, verdict, seed, replicas}.
Json estimator_record(const std::string& op, const Params& params, const Estimate& est, std::optional<double> bound,
                      const std::string& verdict);

struct ExperimentOutput {
  ResultRecord summary;
  std::string detail_csv;
  /// Graph files to write, keyed by file name ("graph.txt", or one per size).
  std::vector<std::pair<std::string, Graph>> graphs;
};

/// Runs the experiment in memory.
ExperimentOutput execute_experiment(const ExperimentConfig& config);

/// Writes summary.json, detail.csv and the graph files into `dir` (created if needed).
void write_experiment_output(const ExperimentOutput& out, const std::string& dir);

/// Exit code 4 marks a completed run with at least one fail verdict.
inline constexpr int kExitFailVerdict = 4;
int verdict_exit_code(const ResultRecord& record);

enum class VerifyLevel { Fast, Full };

struct VerifyRow {
  std::string lemma;   // result being confronted
  std::string check;
  std::string verdict;
  std::string detail;
};

struct VerifyOptions {
  VerifyLevel level = VerifyLevel::Fast;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> replicas;  // caps every Monte Carlo check
  int jobs = 1;
};

struct VerifyReport {
  std::vector<VerifyRow> rows;
  ResultRecord record;
  bool any_fail() const;
  /// Fixed-width lemma-by-lemma table.
  std::string table() const;
  std::string csv() const;
};

VerifyReport verify_suite(const VerifyOptions& options);
/// Writes verify.json and verify.csv.
void write_verify_output(const VerifyReport& report, const std::string& dir);

}  // namespace dynwalk
