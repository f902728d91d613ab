#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace modmi {

// Entry point of the `modmi` tool. `args` excludes the program name.
// Returns the process exit code: 0 success, 1 runtime failure, 2 usage error
// or infeasible request.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace modmi
