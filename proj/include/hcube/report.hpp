#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace hcube {

using nlohmann::json;

/// Non-finite doubles become JSON null rather than failing to serialize.
inline json json_number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

/// Structured outcome of one conformance check. Checks never throw on a
/// failed inequality; they record it here.
struct CheckReport {
  static constexpr std::size_t kMaxListedViolations = 16;

  std::string check;
  std::string claim_id;
  int n_min = 0;
  int n_max = 0;
  json params = json::object();
  json constants = json::object();
  json worst_case = nullptr;
  double worst_violation = 0.0;
  bool pass = true;
  std::size_t violation_count = 0;
  std::vector<std::string> violations;

  CheckReport() = default;
  CheckReport(std::string check_name, std::string claim, int lo, int hi)
      : check(std::move(check_name)), claim_id(std::move(claim)), n_min(lo), n_max(hi) {}

  void fail(std::string what) {
    pass = false;
    ++violation_count;
    if (violations.size() < kMaxListedViolations) violations.push_back(std::move(what));
  }

  /// Tracks the largest violation amount seen (positive means a breach).
  void observe(double violation, json where) {
    if (worst_case.is_null() || violation > worst_violation) {
      worst_violation = violation;
      worst_case = std::move(where);
    }
  }

  void absorb(const CheckReport& other) {
    if (!other.pass) pass = false;
    violation_count += other.violation_count;
    for (const auto& v : other.violations) {
      if (violations.size() < kMaxListedViolations) violations.push_back(other.check + ": " + v);
    }
    if (!other.worst_case.is_null()) observe(other.worst_violation, other.worst_case);
  }

  json to_json() const {
    json j{{"check", check},
           {"claim_id", claim_id},
           {"n_range", {n_min, n_max}},
           {"params", params},
           {"worst_case", worst_case},
           {"worst_violation", json_number(worst_violation)},
           {"pass", pass},
           {"violation_count", violation_count},
           {"constants", constants}};
    if (!violations.empty()) j["violations"] = violations;
    return j;
  }
};

}  // namespace hcube
