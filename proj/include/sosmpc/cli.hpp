#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sosmpc {

// Environment variable naming the directory for relative output paths.
inline constexpr const char* kOutDirEnv = "SOSMPC_OUT_DIR";

// args excludes the program name. Returns 0 on success, 1 when a solver or
// validator reports a failure, 2 on usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sosmpc
