#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace autodetect::cli {

/// Runs one command line. `args` excludes the program name. Help text goes
/// to `out`, logs and diagnostics to `err`. Returns 0 on success, 1 on a
/// usage error and 2 on a data or model error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace autodetect::cli
