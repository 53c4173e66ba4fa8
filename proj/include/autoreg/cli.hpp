#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace autoreg::cli {

/// Runs the `autoreg` command line. `args` excludes the program name.
/// Returns the process exit code; 0 iff no error path was taken.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace autoreg::cli
