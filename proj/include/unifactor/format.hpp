#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace unifactor {

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) return std::to_string(x);
  return std::string(buf, end);
}

}  // namespace unifactor
