#pragma once

// Locale-independent CSV emission.  Doubles use the shortest round-trip
// form from std::to_chars, so output is byte-stable for a given build.

#include <charconv>
#include <concepts>
#include <ostream>
#include <string>
#include <string_view>

namespace keysim {

template <typename T>
std::string csv_field(const T& value) {
  if constexpr (std::same_as<T, bool>) {
    return value ? "true" : "false";
  } else if constexpr (std::is_arithmetic_v<T>) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, end);
  } else {
    std::string_view text(value);
    if (text.find_first_of(",\"\n") == std::string_view::npos) return std::string(text);
    std::string quoted = "\"";
    for (char c : text) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    return quoted + '"';
  }
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  template <typename... Ts>
  void row(const Ts&... values) {
    bool first = true;
    ((out_ << (first ? "" : ",") << csv_field(values), first = false), ...);
    out_ << '\n';
  }

  void flush() { out_.flush(); }

 private:
  std::ostream& out_;
};

}  // namespace keysim
