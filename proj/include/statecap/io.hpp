#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "statecap/channel.hpp"
#include "statecap/state_models.hpp"

namespace statecap {

// A fully validated experiment: channel family, state process, task name,
// and the task parameter block (already schema-checked for the task).
struct ExperimentConfig {
  StateChannel channel;
  StateProcess process;
  std::string task;  // first-order | second-order | bounds | audit | constants
  nlohmann::json parameters;
  std::string json_out;  // result file name ("" -> task + ".json")
  std::string csv_out;   // curve file name ("" -> task + ".csv")
  std::uint64_t config_hash = 0;  // FNV-1a over the canonical config text
};

// Parses and validates a config document.  task_override, when nonempty,
// selects the task (must agree with the config's own "task" if both are
// given).  Throws SchemaError on any structural or range problem.
ExperimentConfig parse_config(const nlohmann::json& doc,
                              const std::string& task_override = "");
ExperimentConfig load_config(const std::string& path,
                             const std::string& task_override = "");

// Executes the task and writes the JSON result (and CSV curve where the
// task produces one) under out_dir.  Deterministic given (config, seed):
// floats are serialized with 17 significant digits and object keys are
// sorted, so re-runs are byte-identical.  Returns the result document.
// Throws TaskError (wrapping compute errors) on failure.
nlohmann::json run(const ExperimentConfig& config, const std::string& out_dir,
                   std::optional<std::uint64_t> seed_override = std::nullopt);

// Full pipeline with CLI-style error mapping: 0 ok, 2 schema error,
// 3 compute error.  Messages go to stderr.
int run_config_file(const std::string& config_path,
                    const std::string& task_override,
                    const std::string& out_dir,
                    std::optional<std::uint64_t> seed_override = std::nullopt);

// Canonical serialization: sorted keys, floats at 17 significant digits,
// infinities as the strings "inf"/"-inf".
std::string dump_pinned(const nlohmann::json& j, int indent = 2);

}  // namespace statecap
