#pragma once
// Formatting helpers. Doubles go through std::to_chars so every emitted
// number is the shortest round-trip form, independent of locale and stream
// state; that keeps repeated runs byte-comparable.

#include <charconv>
#include <cstdint>
#include <ctime>
#include <stdexcept>
#include <string>

namespace normgrid {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, res.ptr);
}

inline std::string format_int(std::int64_t v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) throw std::runtime_error("format_int failed");
  return std::string(buf, res.ptr);
}

// Wall-clock stamp, UTC. Only ever written under volatile output sections.
inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  if (std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm) == 0) {
    return "1970-01-01T00:00:00Z";
  }
  return std::string(buf);
}

}  // namespace normgrid
