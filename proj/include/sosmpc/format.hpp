#pragma once

#include <string>

namespace sosmpc {

// Shortest decimal string that parses back to the same double.
std::string format_real(double v);

}  // namespace sosmpc
