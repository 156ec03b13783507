#pragma once

// Command-line front end. run_cli takes argv without the program name so
// tests can drive every subcommand in-process.

#include <ostream>
#include <string>
#include <vector>

#include "vsrnav/config.hpp"

namespace vsrnav::cli {

/// 0 success, 1 domain error (kind and message on err), 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env = process_env);

}  // namespace vsrnav::cli
