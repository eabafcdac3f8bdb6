#pragma once

#include <charconv>
#include <string>

namespace audionav {

/// Shortest representation that round-trips; stable across runs.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return "nan";
  return {buf, end};
}

} // namespace audionav
