#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace icmvc::cli {

/// Entry point shared by the executable and the tests. `args` includes the
/// program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace icmvc::cli
