#pragma once

// Command-line front end: parses flags, loads the system config, runs the
// requested pipeline (thermal | snr | sweep | optimize | scenarios), writes
// CSV/JSON/gnuplot outputs, and prints a one-line summary.
//
// Exit codes: 0 success, 1 error (bad config, solver failure), 2 simulation
// succeeded but a design constraint (gradient limit or receiver sensitivity)
// is violated at the evaluated operating point.

#include <string>
#include <vector>

namespace photonoc::cli {

int run(int argc, char** argv);

// Convenience wrapper for tests: args exclude the program name.
int run(const std::vector<std::string>& args);

}  // namespace photonoc::cli
