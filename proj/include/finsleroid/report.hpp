#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "finsleroid/error.hpp"

namespace finsleroid {

inline constexpr const char* kToolVersion = "0.1.0";

/// One verified statement at one sample. `sample` is -1 for checks that
/// aggregate over the whole sample set.
struct CheckRecord {
  std::string name;
  std::string battery;
  std::string ref;  // the formula or property being checked
  long sample = -1;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string tolerance_source = "default";
  bool applicable = true;
  bool pass = true;
  std::string note;
};

struct ReportSummary {
  std::size_t total = 0;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t skipped = 0;
};

struct Report {
  std::string scenario;
  std::string tag;
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  std::optional<std::string> timestamp;
  std::vector<CheckRecord> checks;
  std::vector<std::string> warnings;

  ReportSummary summary() const {
    ReportSummary s;
    s.total = checks.size();
    for (const auto& c : checks) {
      if (!c.applicable) {
        ++s.skipped;
      } else if (c.pass) {
        ++s.passed;
      } else {
        ++s.failed;
      }
    }
    return s;
  }
  bool all_pass() const { return summary().failed == 0; }
};

namespace detail {

inline nlohmann::json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

inline double number_from(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw Error(Errc::SchemaError, "expected a number or null");
  return j.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const CheckRecord& c) {
  nlohmann::json j = {{"name", c.name},
                      {"battery", c.battery},
                      {"ref", c.ref},
                      {"sample", c.sample},
                      {"residual", detail::number_or_null(c.residual)},
                      {"tolerance", detail::number_or_null(c.tolerance)},
                      {"tolerance_source", c.tolerance_source},
                      {"applicable", c.applicable},
                      {"pass", c.pass}};
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

inline nlohmann::json to_json(const Report& r) {
  nlohmann::json j;
  j["scenario"] = r.scenario;
  j["tag"] = r.tag;
  j["seed"] = r.seed;
  j["tool_version"] = r.tool_version;
  if (r.timestamp) j["timestamp"] = *r.timestamp;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : r.checks) j["checks"].push_back(to_json(c));
  const ReportSummary s = r.summary();
  j["summary"] = {{"total", s.total}, {"passed", s.passed}, {"failed", s.failed}, {"skipped", s.skipped}};
  j["warnings"] = r.warnings;
  return j;
}

/// Parses a report written by to_json; anything malformed is a SchemaError.
inline Report report_from_json(const nlohmann::json& j) {
  auto fail = [](const std::string& m) { throw Error(Errc::SchemaError, "malformed report: " + m); };
  if (!j.is_object()) fail("top level must be an object");
  for (const char* key : {"scenario", "seed", "checks", "summary"}) {
    if (!j.contains(key)) fail(std::string("missing key \"") + key + "\"");
  }
  Report r;
  try {
    r.scenario = j.at("scenario").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("tag")) r.tag = j.at("tag").get<std::string>();
    if (j.contains("tool_version")) r.tool_version = j.at("tool_version").get<std::string>();
    if (j.contains("timestamp")) r.timestamp = j.at("timestamp").get<std::string>();
    if (j.contains("warnings")) r.warnings = j.at("warnings").get<std::vector<std::string>>();
    if (!j.at("checks").is_array()) fail("checks must be an array");
    for (const auto& c : j.at("checks")) {
      if (!c.is_object()) fail("check record must be an object");
      CheckRecord rec;
      rec.name = c.at("name").get<std::string>();
      rec.battery = c.value("battery", std::string());
      rec.ref = c.at("ref").get<std::string>();
      rec.sample = c.at("sample").get<long>();
      rec.residual = detail::number_from(c.at("residual"));
      rec.tolerance = detail::number_from(c.at("tolerance"));
      rec.tolerance_source = c.value("tolerance_source", std::string("default"));
      rec.applicable = c.value("applicable", true);
      rec.pass = c.at("pass").get<bool>();
      rec.note = c.value("note", std::string());
      r.checks.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(e.what());
  }
  const auto& s = j.at("summary");
  const ReportSummary mine = r.summary();
  if (!s.is_object() || s.value("total", std::size_t{0}) != mine.total ||
      s.value("failed", std::size_t{0}) != mine.failed) {
    fail("summary counts do not match the check records");
  }
  return r;
}

/// Failed records first, then passed, then skipped; stable within groups.
inline std::vector<CheckRecord> presentation_order(const Report& r) {
  std::vector<CheckRecord> v = r.checks;
  auto rank = [](const CheckRecord& c) { return !c.applicable ? 2 : c.pass ? 1 : 0; };
  std::stable_sort(v.begin(), v.end(), [&](const CheckRecord& a, const CheckRecord& b) { return rank(a) < rank(b); });
  return v;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string format_number(double v) {
  if (!std::isfinite(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(6) << std::scientific << v;
  return os.str();
}

inline const char* status(const CheckRecord& c) { return !c.applicable ? "SKIP" : c.pass ? "PASS" : "FAIL"; }

}  // namespace detail

inline constexpr const char* kCsvHeader = "status,name,battery,sample,residual,tolerance,tolerance_source,ref";

inline std::string render_csv(const Report& r) {
  std::ostringstream os;
  os << kCsvHeader << "\n";
  for (const auto& c : presentation_order(r)) {
    os << detail::status(c) << ',' << detail::csv_field(c.name) << ',' << detail::csv_field(c.battery) << ','
       << c.sample << ',' << detail::format_number(c.residual) << ',' << detail::format_number(c.tolerance) << ','
       << detail::csv_field(c.tolerance_source) << ',' << detail::csv_field(c.ref) << "\n";
  }
  return os.str();
}

inline std::string render_table(const Report& r) {
  std::size_t wn = 4, wb = 7;
  for (const auto& c : r.checks) {
    wn = std::max(wn, c.name.size());
    wb = std::max(wb, c.battery.size());
  }
  std::ostringstream os;
  auto row = [&](const std::string& st, const std::string& name, const std::string& bat, const std::string& smp,
                 const std::string& res, const std::string& tol) {
    os << std::left << std::setw(6) << st << std::setw(static_cast<int>(wn) + 2) << name
       << std::setw(static_cast<int>(wb) + 2) << bat << std::setw(8) << smp << std::setw(15) << res << tol << "\n";
  };
  row("STATUS", "NAME", "BATTERY", "SAMPLE", "RESIDUAL", "TOLERANCE");
  for (const auto& c : presentation_order(r)) {
    row(detail::status(c), c.name, c.battery, std::to_string(c.sample), detail::format_number(c.residual),
        detail::format_number(c.tolerance));
  }
  if (!r.checks.empty()) {
    const ReportSummary s = r.summary();
    os << "\n" << r.scenario << ": " << s.passed << " passed, " << s.failed << " failed, " << s.skipped
       << " skipped of " << s.total << "\n";
  }
  return os.str();
}

}  // namespace finsleroid
