#ifndef QBM_TOOLS_CLI_HPP
#define QBM_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace qbm::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Runs one command. Exit codes: 0 success, 1 input error, 2 numerical failure
/// (or a failed validation).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qbm::cli

#endif  // QBM_TOOLS_CLI_HPP
