#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xbrltag {

// Exit codes: 0 success, 1 runtime failure, 2 usage error.
// `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace xbrltag
