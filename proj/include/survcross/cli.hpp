#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace survcross::cli {

/// Process exit codes.
enum ExitStatus : int {
  kSuccess = 0,
  kValidationError = 1,
  kRuntimeFailure = 2,  // computed, but convergence is suspect or the run failed
};

/// Runs one verb (`cross`, `sensitivity`, `fit`, `simulate`, `sweep`).
/// `args` excludes the program name. Results go to `out` unless an output
/// file is requested; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace survcross::cli
