#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ptkit::cli {

enum ExitCode : int { kOk = 0, kDataError = 1, kConfigError = 2 };

// Runs one subcommand. `args` excludes the program name. Data goes to `out`,
// diagnostics and logs to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ptkit::cli
