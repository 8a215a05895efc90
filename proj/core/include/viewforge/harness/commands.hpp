#pragma once

#include <iosfwd>

namespace viewforge::harness {

enum ExitCode : int {
  kExitOk = 0,
  kExitRunFailure = 1,
  kExitUsage = 2,
};

// The `viewforge` command line: pack, inspect, bench, train, sweep, report.
// Machine output goes to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace viewforge::harness
