#pragma once

#include <ostream>

namespace oucv::cli {

/// Parses the command line and runs one subcommand. Returns the process exit
/// code: 0 success, 1 domain error, 2 I/O error, 3 numerical failure.
/// Errors are written to `err` as one line of JSON.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace oucv::cli
