#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace volstab {

enum ExitCode : int {
    kExitOk = 0,
    kExitUnexpected = 1,
    kExitConfigError = 2,
    kExitInputError = 3,
    kExitEmptyResult = 4,
    kExitOutputError = 5,
};

/// Entry point of the `volstab` tool; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace volstab
