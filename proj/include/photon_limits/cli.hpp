#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace photon_limits {

// Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.
// `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

}  // namespace photon_limits
