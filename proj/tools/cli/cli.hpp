// irsq command-line front end.
//
// Exit status: 0 success, 1 configuration or usage error, 2 numerical
// failure inside a solver.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace irsq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

/// `args` excludes the program name. CSV and command output go to the
/// --output file or `out`; the summary paragraph and errors go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace irsq::cli
