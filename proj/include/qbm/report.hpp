#ifndef QBM_REPORT_HPP
#define QBM_REPORT_HPP

#include <string>
#include <vector>

#include <json.hpp>

namespace qbm {

/// One named comparison: passed iff measured <= tolerance.
struct Check {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::string title;
  std::vector<Check> checks;

  bool passed() const;
  Check& add(std::string name, double measured, double tolerance, std::string detail = {});
  /// Appends every check of other with its name prefixed.
  void merge(const ValidationReport& other, const std::string& prefix = {});
  nlohmann::json to_json() const;
};

}  // namespace qbm

#endif  // QBM_REPORT_HPP
