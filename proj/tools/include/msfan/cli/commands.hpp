#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace msfan::cli {

/// Runs the `msfan` command line with `args` (program name excluded).
/// Reports go to `out`; failures are written to `err` as one JSON line
/// {"error": kind, "code": n, "message": text} and returned as the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace msfan::cli
