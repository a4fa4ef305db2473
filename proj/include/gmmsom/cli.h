#pragma once

#include <iosfwd>

namespace gmmsom {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitNumeric = 3,
};

/// Entry point of the gmmsom command line tool. Subcommands: train, score,
/// cluster, sample, verify-equivalence, inspect.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gmmsom
