#include "sosmpc/format.hpp"

#include <charconv>

namespace sosmpc {

std::string format_real(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace sosmpc
