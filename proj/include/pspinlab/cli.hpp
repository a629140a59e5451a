#pragma once

#include <string>
#include <vector>

namespace pspin::cli {

// Entry point shared by the `pspin` binary and the test suite. `args` are
// the command-line tokens after the program name. Returns the process exit
// code: 0 success, 2 config/schema violation, 3 capacity refusal, 1 any
// other runtime failure. Errors additionally emit a one-line JSON record on
// stderr so callers can parse failures mechanically.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace pspin::cli
