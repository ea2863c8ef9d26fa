#pragma once

#include <iosfwd>

namespace nncert {

/// Entry point of the command-line tool. Returns the process exit code:
/// 0 success (infeasible results included), 2 input error, 3 solver failure,
/// 4 verification failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nncert
