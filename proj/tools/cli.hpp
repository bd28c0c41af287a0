#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pdd::cli {

/// Process exit codes; stable contract for harnesses.
enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_config = 2,
    exit_numerical = 3,
};

/// Entry point shared by the `pdd` binary and tests. `args` excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pdd::cli
