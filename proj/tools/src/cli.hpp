#pragma once

#include <iosfwd>

namespace lama::cli {

enum ExitCode : int {
  kOk = 0,
  kInternalError = 1,
  kConfigError = 2,
  kIoError = 3,
  kBackendError = 4,
};

// Entry point of the `lama` tool. Subcommands: prepare-data, predict,
// evaluate, ablate, render-report.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lama::cli
