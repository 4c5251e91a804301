#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sobolrf {

// Entry point of the sobolrf command line. `args` excludes the program name.
// Returns 0 on success, 1 on a runtime or compute failure and 2 on a usage or
// configuration error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sobolrf
