#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace skex::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kDataError = 2 };

/// Runs one command line (args exclude the program name). Messages go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace skex::cli
