#include "qbm/report.hpp"

#include <algorithm>
#include <cmath>

namespace qbm {

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

Check& ValidationReport::add(std::string name, double measured, double tolerance, std::string detail) {
  // NaN never passes
  checks.push_back({std::move(name), measured <= tolerance, measured, tolerance, std::move(detail)});
  return checks.back();
}

void ValidationReport::merge(const ValidationReport& other, const std::string& prefix) {
  for (Check c : other.checks) {
    c.name = prefix + c.name;
    checks.push_back(std::move(c));
  }
}

nlohmann::json ValidationReport::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const Check& c : checks) {
    nlohmann::json j = {{"name", c.name}, {"passed", c.passed}, {"tolerance", c.tolerance}};
    j["measured"] = std::isfinite(c.measured) ? nlohmann::json(c.measured) : nlohmann::json(nullptr);
    if (!c.detail.empty()) j["detail"] = c.detail;
    list.push_back(j);
  }
  return {{"title", title}, {"passed", passed()}, {"checks", list}};
}

}  // namespace qbm
