#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace unlearn::cli {

/// Exit codes: 0 success, 2 input or I/O failure, 3 numerical or method failure.
enum ExitCode : int { kOk = 0, kInputError = 2, kMethodError = 3 };

/// Runs the `unlearn` command line. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace unlearn::cli
