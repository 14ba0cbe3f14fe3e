#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>

#include "ecodiv/error.hpp"

namespace ecodiv {

/// Shortest decimal that round-trips, independent of the C locale.
inline std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw Error(Errc::kFormat, "cannot format number");
  return std::string(buf, end);
}

inline double parse_double(std::string_view text) {
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw Error(Errc::kFormat, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

template <typename Int>
Int parse_int(std::string_view text) {
  Int value{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw Error(Errc::kFormat, "not an integer: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace ecodiv
