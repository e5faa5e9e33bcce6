#ifndef RXNSENS_FORMAT_HPP
#define RXNSENS_FORMAT_HPP

#include <charconv>
#include <optional>
#include <string>

namespace rxnsens {

/// Shortest round-trip decimal form of a double.
inline std::string format_number(double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

/// Empty string for a missing value.
inline std::string format_number(const std::optional<double>& value) {
  return value ? format_number(*value) : std::string();
}

/// RFC 4180 quoting for text fields that contain a comma, quote or newline.
inline std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char ch : text) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace rxnsens

#endif  // RXNSENS_FORMAT_HPP
