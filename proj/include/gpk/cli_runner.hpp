#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gpk {

// The whole command-line surface, callable in-process so tests can drive
// the exact code path the binary runs. `args` excludes the program name.
// Returns the process exit code: 0 success, 2 missing or unreadable
// files, 1 other failures.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace gpk
