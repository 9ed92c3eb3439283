#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cylevo {

/// Runs the command-line interface. Exit codes: 0 success, 1 usage error,
/// 2 data error, 3 internal error. Progress goes to err; machine-readable
/// output only to files.
int run_cli(std::vector<std::string> args, std::ostream& out,
            std::ostream& err);

}  // namespace cylevo
