#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace merge3 {

/// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
int cli_main(int argc, char** argv);
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace merge3
