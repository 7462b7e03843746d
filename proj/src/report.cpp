#include "opdiff/report.hpp"

#include <sstream>
#include <stdexcept>

#include "opdiff/error.hpp"

namespace opdiff {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::informational: return "informational";
  }
  return "informational";
}

nlohmann::json make_series(const std::string& x_name, const std::vector<double>& x, const std::string& y_name,
    const std::vector<double>& y) {
  return {{"x_name", x_name}, {"y_name", y_name}, {"x", x}, {"y", y}};
}

void ExperimentReport::add(std::string name, std::string anchor_text, nlohmann::json value) {
  measurements.push_back({std::move(name), std::move(anchor_text), std::move(value)});
}

const Measurement* ExperimentReport::find(const std::string& name) const {
  for (const auto& m : measurements) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

double ExperimentReport::scalar(const std::string& name) const {
  const auto* m = find(name);
  if (!m || !m->value.is_number()) throw std::out_of_range("no numeric measurement '" + name + "'");
  return m->value.get<double>();
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& m : measurements) ms.push_back({{"name", m.name}, {"anchor", m.anchor}, {"value", m.value}});
  return {{"schema_version", kSchemaVersion}, {"experiment_id", experiment_id}, {"anchor", anchor}, {"config", config},
      {"measurements", std::move(ms)}, {"verdict", to_string(verdict)}, {"verdict_detail", verdict_detail},
      {"notes", notes}};
}

ExperimentReport ExperimentReport::from_json(const nlohmann::json& j) {
  if (auto problem = validate_report(j)) throw Error(ErrorKind::schema_violation, *problem);
  ExperimentReport r;
  r.experiment_id = j.at("experiment_id").get<std::string>();
  r.anchor = j.at("anchor").get<std::string>();
  r.config = j.at("config");
  for (const auto& m : j.at("measurements")) {
    r.measurements.push_back({m.at("name").get<std::string>(), m.at("anchor").get<std::string>(), m.at("value")});
  }
  const auto v = j.at("verdict").get<std::string>();
  r.verdict = v == "pass" ? Verdict::pass : (v == "fail" ? Verdict::fail : Verdict::informational);
  r.verdict_detail = j.at("verdict_detail").get<std::string>();
  r.notes = j.at("notes").get<std::vector<std::string>>();
  return r;
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  bool first = true;
  for (const auto& m : measurements) {
    if (!m.value.is_object() || !m.value.contains("x")) continue;
    if (!first) out << '\n';
    first = false;
    out << "# " << m.name << '\n';
    out << m.value.at("x_name").get<std::string>() << ',' << m.value.at("y_name").get<std::string>() << '\n';
    const auto& x = m.value.at("x");
    const auto& y = m.value.at("y");
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
      out << x.at(i).get<double>() << ',' << y.at(i).get<double>() << '\n';
    }
  }
  return out.str();
}

std::optional<std::string> validate_report(const nlohmann::json& j) {
  if (!j.is_object()) return "/: report must be an object";
  const std::vector<std::pair<std::string, nlohmann::json::value_t>> fields = {
      {"schema_version", nlohmann::json::value_t::number_unsigned}, {"experiment_id", nlohmann::json::value_t::string},
      {"anchor", nlohmann::json::value_t::string}, {"config", nlohmann::json::value_t::object},
      {"measurements", nlohmann::json::value_t::array}, {"verdict", nlohmann::json::value_t::string},
      {"verdict_detail", nlohmann::json::value_t::string}, {"notes", nlohmann::json::value_t::array}};
  for (const auto& [key, type] : fields) {
    if (!j.contains(key)) return "/" + key + ": missing";
    const auto actual = j.at(key).type();
    const bool number_ok = type == nlohmann::json::value_t::number_unsigned &&
                           (actual == nlohmann::json::value_t::number_integer);
    if (actual != type && !number_ok) return "/" + key + ": wrong type";
  }
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const auto& f : fields) known = known || f.first == key;
    if (!known) return "/" + key + ": unknown field";
  }
  if (j.at("schema_version").get<int>() != ExperimentReport::kSchemaVersion) return "/schema_version: unsupported";
  const auto verdict = j.at("verdict").get<std::string>();
  if (verdict != "pass" && verdict != "fail" && verdict != "informational") return "/verdict: unknown value";
  const auto& ms = j.at("measurements");
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const auto& m = ms.at(i);
    const std::string where = "/measurements/" + std::to_string(i);
    if (!m.is_object() || !m.contains("name") || !m.contains("anchor") || !m.contains("value")) {
      return where + ": needs name, anchor, value";
    }
    if (!m.at("name").is_string() || !m.at("anchor").is_string()) return where + ": name and anchor are strings";
    if (m.at("anchor").get<std::string>().empty()) return where + "/anchor: empty";
    const auto& v = m.at("value");
    if (v.is_object() && v.contains("x")) {
      if (!v.contains("y") || !v.at("x").is_array() || !v.at("y").is_array() || v.at("x").size() != v.at("y").size()) {
        return where + "/value: series needs equal-length x and y arrays";
      }
    }
  }
  for (const auto& n : j.at("notes")) {
    if (!n.is_string()) return "/notes: entries are strings";
  }
  return std::nullopt;
}

}  // namespace opdiff
