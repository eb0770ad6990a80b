#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace syncon {

/// Entry point of the `syncon` command-line tool. `args[0]` is the program
/// name. Exit codes: 0 success, 1 data/solver error or failed comparison,
/// 2 usage error.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace syncon
