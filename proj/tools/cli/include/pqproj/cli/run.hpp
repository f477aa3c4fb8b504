#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pqproj::cli {

enum ExitCode : int { kPassed = 0, kCheckFailed = 1, kInvalidInput = 2 };

/// Runs one command. `args` excludes the program name. Reports go to `out`
/// (or to --out files), diagnostics and usage text to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pqproj::cli
