#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mmskit::cli {

/// Exit codes: 0 success, 1 domain violation or run failure, 2 usage or I/O
/// error.
enum Exit : int { ok = 0, violation = 1, usage = 2 };

/// Runs the `mmskit` command line. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace mmskit::cli
