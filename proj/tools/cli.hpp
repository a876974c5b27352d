#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rfvar::cli {

/// Parses `args` (without the program name), runs the command and writes the
/// result to `out` (or the --out file). Returns 0 on success, 2 on usage or
/// precondition errors and 1 on computation errors; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rfvar::cli
