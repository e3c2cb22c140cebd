#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rscatter::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kNumerical = 3 };

/// Runs one subcommand (generate | estimate | stress | tune). `args` excludes
/// the program name. JSON goes to --output or `out`; diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rscatter::cli
