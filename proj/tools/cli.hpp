#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace contexta::cli {

/// Runs the `contexta` multitool. `args` excludes the program name. Returns
/// the process exit code: 0 success, 1 runtime error, 2 usage or validation
/// error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace contexta::cli
