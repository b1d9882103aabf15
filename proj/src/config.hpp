#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "params.hpp"

namespace vtl {

inline constexpr char kVersion[] = "1.0.0";

// Parse strict JSON model blocks; unknown keys are rejected with their path.
ModelParams parse_single_model(const nlohmann::json& node, const std::string& path);
TwoCpParams parse_two_cp_model(const nlohmann::json& node, const std::string& path);
bool model_is_two_cp(const nlohmann::json& node);

struct Artifact {
  std::string name;     // file name, e.g. "trajectory.csv"
  std::string content;  // RFC-4180 CSV, LF line endings
};

struct CommandOutput {
  nlohmann::json report;            // full report object
  std::vector<Artifact> artifacts;  // embedded CSV artifacts, also in report
};

// Execute a full config: {"model": {...}, "command": "...", ...options}.
// Optional top-level keys: "seed" (uint64) and "convention". Throws VtlError
// on invalid configs or solver/regime failures.
CommandOutput run_config(const nlohmann::json& config);
CommandOutput run_config_text(const std::string& text);

// Format a double with 17 significant digits (round-trip safe).
std::string format_number(double x);

// Structural check of a report against the documented schema; returns the
// list of violations (empty when valid).
std::vector<std::string> validate_report(const nlohmann::json& report);

}  // namespace vtl
