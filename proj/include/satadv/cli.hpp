#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace satadv {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kDataDirEnv = "SATADV_DATA_DIR";

/// Runs the command line `args` (args[0] is the program name). Returns 0 on
/// success, 1 on usage errors and 2 on runtime errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace satadv
