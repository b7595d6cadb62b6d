#pragma once

#include <string>
#include <vector>

namespace powerfolio {

/// Entry point behind the `powerfolio` binary. Returns the process exit
/// code: 0 success, 1 validation failure, 2 numerical failure (conditioning
/// or an unexplained formula/oracle/Monte-Carlo disagreement), 3 I/O, usage
/// or schema failure.
int run_command(const std::vector<std::string>& args);

}  // namespace powerfolio
