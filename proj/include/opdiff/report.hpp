#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace opdiff {

enum class Verdict { pass, fail, informational };

std::string to_string(Verdict v);

struct Measurement {
  std::string name;
  std::string anchor;   // the identity or bound the quantity probes
  nlohmann::json value; // number, bool, string, or a series (see make_series)
};

/// {"x_name", "y_name", "x": [...], "y": [...]}
nlohmann::json make_series(const std::string& x_name, const std::vector<double>& x, const std::string& y_name,
    const std::vector<double>& y);

/// Structured record of one probe: config echo, named measurements, verdict.
struct ExperimentReport {
  static constexpr int kSchemaVersion = 1;

  std::string experiment_id;
  std::string anchor;
  nlohmann::json config = nlohmann::json::object();
  std::vector<Measurement> measurements;
  Verdict verdict = Verdict::informational;
  std::string verdict_detail;
  std::vector<std::string> notes;

  void add(std::string name, std::string anchor_text, nlohmann::json value);
  const Measurement* find(const std::string& name) const;
  /// Numeric measurement by name; throws std::out_of_range when absent.
  double scalar(const std::string& name) const;

  nlohmann::json to_json() const;
  static ExperimentReport from_json(const nlohmann::json& j);
  /// CSV of every series measurement, one block per series.
  std::string to_csv() const;
};

/// Empty when j is a well-formed report; otherwise the first problem found,
/// with its JSON-pointer location.
std::optional<std::string> validate_report(const nlohmann::json& j);

}  // namespace opdiff
