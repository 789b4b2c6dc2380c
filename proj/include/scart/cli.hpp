#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace scart::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kInternal = 3 };

// Entry point of the `scart` tool; args[0] is the program name.
// Subcommands: baseline, run, matrix, attack-csv, eval.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scart::cli
