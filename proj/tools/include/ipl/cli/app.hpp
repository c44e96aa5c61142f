#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ipl::cli {

/// Process exit codes; stable across releases.
enum ExitCode : int {
  kExitOk = 0,
  kExitRuntime = 1,       // I/O and other unexpected failures
  kExitConfig = 2,        // bad arguments, unknown or invalid config keys
  kExitDivergence = 3,    // non-finite losses or gradients during training
  kExitVerification = 4,  // a verify or grad-check suite failed
};

/// `ipl <command> [--config PATH] [--seed N] [--out DIR] [key=value ...]`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace ipl::cli
