#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pictoforge {

enum ExitCode { kExitOk = 0, kExitFindings = 1, kExitUsage = 2, kExitIo = 3 };

/// Runs one CLI invocation. `args` excludes the program name.
/// Repository commands use --repo, else $PICTOFORGE_REPO.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream& in);

} // namespace pictoforge
