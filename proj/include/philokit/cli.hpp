#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace philokit::cli {

/// Runs one command line (without the program name). Exit codes: 0 success or --help,
/// 1 runtime or I/O failure, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace philokit::cli
