#pragma once

#include <charconv>
#include <string>

#include "wordcode/types.hpp"

namespace wordcode {

/// Shortest decimal form that parses back to exactly the same double.
inline std::string fmt_double(Scalar v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace wordcode
