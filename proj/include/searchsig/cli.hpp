#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace searchsig {

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 1 on a validation or usage error, 2 on a runtime error.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv);

}  // namespace searchsig
