#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "opdiff/report.hpp"

namespace opdiff::cli {

inline constexpr int kConfigSchemaVersion = 1;

enum class Command { derive, taylor, verify, experiment };

/// Validated run configuration. `params` holds the command-specific block,
/// already checked for unknown keys.
struct RunConfig {
  Command command = Command::derive;
  std::string experiment;
  std::optional<nlohmann::json> function;
  int n = 1;
  double p = 2.0;
  int dim = 6;
  std::uint64_t seed = 0;
  bool diagnostics_mode = false;
  nlohmann::json params = nlohmann::json::object();
  std::filesystem::path out_dir = ".";
  bool csv = true;

  /// Normalized form; parse_config(to_json()) reproduces the config.
  nlohmann::json to_json() const;
};

/// Throws Error (schema_violation, unknown_function, invalid_p) whose detail
/// starts with the JSON-pointer of the offending field.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

std::vector<ExperimentReport> execute(const RunConfig& config);

/// 0 iff no report failed, 2 otherwise.
int exit_status(const std::vector<ExperimentReport>& reports);

/// Writes <dir>/<id>_seed<seed>.json (and .csv when series exist) through a
/// temporary file and a rename. Returns the paths written.
std::vector<std::filesystem::path> write_report(const ExperimentReport& report, const std::filesystem::path& dir,
    std::uint64_t seed, bool csv);

/// Full command-line entry point.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace opdiff::cli
