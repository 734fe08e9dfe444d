#pragma once

#include <ostream>

namespace sharing::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,       // bad flags, unreadable or invalid scenario file
  kInfeasible = 2,  // the model has no feasible point
  kSolverFailure = 3,
};

/// Entry point of the `sharing` tool. CSV goes to --out or to `out`; the run
/// report and all errors go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sharing::cli
