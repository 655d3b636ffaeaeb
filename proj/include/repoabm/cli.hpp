#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace repoabm {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitAborted = 2, kExitIo = 3 };

/// Command-line entry point. `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace repoabm
