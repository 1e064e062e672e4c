#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bleubound::cli {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kUsage = 2,
  kIo = 3,
  kResourceCap = 4,
};

// Runs the tool with `args` (without the program name). Results go to `out`
// unless --output names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bleubound::cli
