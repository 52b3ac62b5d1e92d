#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace freqens {

/// Shortest round-trip decimal form; locale-independent so reports are
/// byte-stable. Non-finite values print as "nan", "inf" or "-inf".
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace freqens
