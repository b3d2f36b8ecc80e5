#pragma once

#include <string>
#include <vector>

namespace drylab::cli {

/// Entry point behind the binary. Exit codes: 0 success, 2 invalid input or
/// configuration, 3 stage-fatal pipeline error (the stage name is printed),
/// 1 anything else.
int run_cli(const std::vector<std::string>& args);

}  // namespace drylab::cli
