#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ctkg {

/// Exit codes: 0 success, 1 runtime or domain error, 2 usage or parse error.
enum ExitStatus : int { kExitOk = 0, kExitError = 1, kExitUsage = 2 };

/// Runs one command line (args excludes the program name). Results go to
/// `out` as JSON, errors to `err` as an error document.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctkg
