#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rgbdnav/keyvalue.hpp"

namespace rgbdnav::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitUsage = 2,
    kExitMissing = 3,
};

// Runs one command line (program name excluded) and returns its exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Same, but the config comes from a manifest snapshot instead of files.
int run_with_config(const std::vector<std::string>& args, const KeyValue& config, std::ostream& out,
                    std::ostream& err);

}  // namespace rgbdnav::cli
