#pragma once

// Command-line front end: classify, iterate, morse, verify, find, katok-report.

#include <iosfwd>
#include <string>
#include <vector>

namespace finsler {

inline constexpr int kExitOk = 0;
inline constexpr int kExitContradiction = 1;
inline constexpr int kExitInputError = 2;

/// args excludes the program name. Diagnostics go to err as one line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace finsler
