#pragma once

#include <atomic>
#include <ostream>

namespace opnc {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitInvariant = 3,
  kExitSolver = 4,
  kExitInterrupted = 130,
};

// Set from a signal handler to stop a sweep; completed rows are still written.
std::atomic<bool>& interrupt_flag();

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace opnc
